"""Problem statement for a holonomic system."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import sympy as sp

from ..operators import GeneratorFrame, OperatorExpr, commutator
from ..scalar import MOMENTUM, SymbolTable, canon, numeric_equal
from .chart import CoordinateChart, cartesian_frame, coordinate_frame, generalized_frame, lambda_name, pi_name

I = sp.I


@dataclass(frozen=True)
class ConstraintSpec:
    """``f_i(X) = C_i``.  Constants may be parameter expressions."""

    functions: tuple[sp.Expr, ...] = ()
    constants: tuple[sp.Expr, ...] = ()

    def __post_init__(self):
        if len(self.functions) != len(self.constants):
            raise ValueError("one constant per constraint function")

    @property
    def count(self) -> int:
        return len(self.functions)


@dataclass(eq=False)
class SystemSpec:
    """Masses, chart, constraints and impressed forces.

    Forces are given directly (``forces``, Cartesian, functions of X and V)
    and/or through a generalized potential ``U = phi - sum V_i A_i``.
    ``values`` holds numeric parameter values for simulation.
    """

    name: str
    table: SymbolTable
    chart: CoordinateChart
    masses: tuple[sp.Expr, ...]
    constraints: ConstraintSpec = field(default_factory=ConstraintSpec)
    forces: tuple[sp.Expr, ...] | None = None
    potential: sp.Expr | None = None
    vector_potential: tuple[sp.Expr, ...] | None = None
    values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        N = self.chart.n
        if len(self.masses) != N:
            raise ValueError("one mass per Cartesian degree of freedom")
        if self.forces is not None and len(self.forces) != N:
            raise ValueError("missing force entry")
        if self.vector_potential is not None and len(self.vector_potential) != N:
            raise ValueError("one vector-potential component per Cartesian dof")
        self._cache: dict = {}

    # sizes and symbols
    @property
    def l(self) -> int:
        return self.constraints.count

    @property
    def n(self) -> int:
        return self.chart.n - self.l

    @property
    def coords(self) -> tuple[sp.Symbol, ...]:
        return self.chart.gen[: self.n]

    @property
    def vels(self) -> tuple[sp.Symbol, ...]:
        return self.chart.gen_vel[: self.n]

    @property
    def constrained(self) -> tuple[sp.Symbol, ...]:
        return self.chart.gen[self.n:]

    @property
    def tq_substitution(self) -> dict:
        """``q_j -> C_j`` and ``v_j -> 0`` for the trailing constrained coordinates."""
        sub = {}
        for q, v, C in zip(self.chart.gen[self.n:], self.chart.gen_vel[self.n:],
                           self.constraints.constants):
            sub[q] = C
            sub[v] = 0
        return sub

    def on_tq(self, e) -> sp.Expr:
        return canon(sp.sympify(e).xreplace(self.tq_substitution))

    def check_constraint_coordinates(self, tol=1e-9, trials=100, seed=0) -> bool:
        back = dict(zip(self.chart.cart, self.chart.forward))
        for f, q in zip(self.constraints.functions, self.constrained):
            if not numeric_equal(sp.sympify(f).xreplace(back), q, trials, tol, seed, self.table):
                return False
        return True

    # frames
    @cached_property
    def cartesian_frame(self) -> GeneratorFrame:
        return cartesian_frame(self.chart)

    @cached_property
    def generalized_frame(self) -> GeneratorFrame:
        return generalized_frame(self.chart)

    @cached_property
    def reduced_frame(self) -> GeneratorFrame:
        if self.l == 0:
            return self.generalized_frame
        return generalized_frame(self.chart, self.n, f"{self.chart.name}:reduced[{self.n}]")

    @cached_property
    def momenta(self) -> tuple[sp.Symbol, ...]:
        return tuple(self.table.add(f"p_{q.name}", MOMENTUM, i, partner=q.name)
                     for i, q in enumerate(self.coords))

    @cached_property
    def momentum_frame(self) -> GeneratorFrame:
        return coordinate_frame(f"{self.chart.name}:momentum[{self.n}]", self.table,
                                self.coords, self.momenta, primed=True, kind="momentum")

    # forces
    @property
    def has_potential(self) -> bool:
        return self.potential is not None or self.vector_potential is not None

    def generalized_potential(self) -> sp.Expr:
        """``U = phi - sum V_i A_i`` in Cartesian symbols."""
        U = sp.sympify(self.potential or 0)
        if self.vector_potential is not None:
            U = U - sum(V * A for V, A in zip(self.chart.cart_vel, self.vector_potential))
        return canon(U)

    def potential_forces(self) -> tuple[sp.Expr, ...]:
        """Monogenic forces ``F_j = -i[lambda_j, U] - [L, [pi_j, U]]``.

        ``U`` is at most linear in V with position-only coefficients, so only
        the free streaming part ``sum V lambda`` of ``L`` contributes to the
        double commutator.
        """
        fr = self.cartesian_frame
        U = OperatorExpr.scalar(fr, self.generalized_potential())
        L_free = OperatorExpr.zero(fr)
        for X, V in zip(self.chart.cart, self.chart.cart_vel):
            L_free = L_free + OperatorExpr.gen(fr, lambda_name(X), V)
        out = []
        for X in self.chart.cart:
            lam = OperatorExpr.gen(fr, lambda_name(X))
            pi = OperatorExpr.gen(fr, pi_name(X))
            F = -I * commutator(lam, U) - commutator(L_free, commutator(pi, U))
            if not F.is_conjugate_free():
                raise ValueError("generalized potential produced an operator-valued force")
            out.append(F.coeff())
        return tuple(out)

    @cached_property
    def impressed_forces(self) -> tuple[sp.Expr, ...]:
        N = self.chart.n
        total = [sp.Integer(0)] * N
        if self.forces is not None:
            total = [a + sp.sympify(b) for a, b in zip(total, self.forces)]
        if self.has_potential:
            total = [a + b for a, b in zip(total, self.potential_forces())]
        return tuple(canon(f) for f in total)

    def numeric_values(self) -> dict[sp.Symbol, float]:
        return {self.table[k]: float(v) for k, v in self.values.items() if k in self.table}
