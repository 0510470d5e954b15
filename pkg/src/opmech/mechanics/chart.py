"""Coordinate charts, generator frames and the conjugate-operator transform."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp

from ..operators import Generator, GeneratorFrame, OperatorExpr, commutator, symmetrized
from ..scalar import ANGLE, SymbolTable, canon, numeric_equal
from .report import Report

I = sp.I


class SingularChartError(ValueError):
    pass


def _latex_name(s: sp.Symbol) -> str:
    return sp.latex(s)


def lambda_name(s: sp.Symbol) -> str:
    return f"lambda_{s.name}"


def pi_name(s: sp.Symbol) -> str:
    return f"pi_{s.name}"


def coordinate_frame(name: str, table: SymbolTable, coords: Sequence[sp.Symbol],
                     vels: Sequence[sp.Symbol], primed: bool = False,
                     kind: str = "velocity") -> GeneratorFrame:
    """Frame with ``[q, lambda_q] = [v, pi_q] = i`` and plain partials."""
    mark = "'" if primed else ""
    pre = "p" if primed else ""
    pairs = []
    for q in coords:
        pairs.append((q, f"lambda{pre}_{q.name}", "lambda", rf"\lambda{mark}_{{{_latex_name(q)}}}"))
    for q, v in zip(coords, vels):
        pairs.append((v, f"pi{pre}_{q.name}", "pi", rf"\pi{mark}_{{{_latex_name(q)}}}"))
    return GeneratorFrame.coordinate(name, table, pairs, kind)


@dataclass
class CoordinateChart:
    """Point transformation ``X = X(q)`` with velocities ``V = J v``.

    ``inverse`` gives ``q_j(X)``; angle coordinates are given as a
    ``(sin q_j(X), cos q_j(X))`` pair.  ``jac_fwd[i, k] = dX_i/dq_k`` and
    ``jac_inv[j, i] = dq_j/dX_i``, both as functions of ``q``.
    """

    name: str
    table: SymbolTable
    cart: tuple[sp.Symbol, ...]
    cart_vel: tuple[sp.Symbol, ...]
    gen: tuple[sp.Symbol, ...]
    gen_vel: tuple[sp.Symbol, ...]
    forward: tuple[sp.Expr, ...]
    inverse: tuple = ()
    jac_fwd: sp.Matrix = field(init=False)
    jac_inv: sp.Matrix = field(init=False)
    jac_det: sp.Expr = field(init=False)
    vel_forward: tuple[sp.Expr, ...] = field(init=False)
    dv_dX: sp.Matrix = field(init=False)

    def __post_init__(self):
        n = len(self.cart)
        if len(self.gen) != n or len(self.forward) != n:
            raise ValueError("chart needs as many generalized as Cartesian coordinates")
        q = sp.Matrix(self.gen)
        J = sp.Matrix(self.forward).jacobian(q).applyfunc(canon)
        self.jac_fwd = J
        self.jac_det = sp.simplify(J.det())
        if self.jac_det == 0:
            raise SingularChartError(f"chart {self.name}: Jacobian determinant vanishes")
        if self.is_identity:
            Jinv = sp.eye(n)
        else:
            Jinv = J.inv(method="LU").applyfunc(lambda e: canon(sp.simplify(e)))
        self.jac_inv = Jinv
        v = sp.Matrix(self.gen_vel)
        self.vel_forward = tuple(canon(e) for e in J * v)
        # dv_k/dX_j = -sum_m (Jinv dJ/dq_m v)_k Jinv[m, j]
        dv = sp.zeros(n, n)
        if not self.is_identity:
            cols = [Jinv * (J.diff(qm) * v) for qm in self.gen]
            for k in range(n):
                for j in range(n):
                    dv[k, j] = canon(sp.simplify(-sum(cols[m][k] * Jinv[m, j] for m in range(n))))
        self.dv_dX = dv

    @property
    def is_identity(self) -> bool:
        return tuple(self.forward) == tuple(self.gen)

    @property
    def n(self) -> int:
        return len(self.cart)

    def to_chart(self, e: sp.Expr) -> sp.Expr:
        """Substitute ``X = X(q)``, ``V = V(q, v)``."""
        if self.is_identity and tuple(self.cart) == tuple(self.gen):
            sub = dict(zip(self.cart_vel, self.gen_vel))
        else:
            sub = dict(zip(self.cart, self.forward))
            sub.update(zip(self.cart_vel, self.vel_forward))
        return canon(sp.sympify(e).xreplace(sub))

    def dV_dq(self, j: int, i: int) -> sp.Expr:
        """``dV_j/dq_i`` at fixed generalized velocities."""
        return canon(sp.diff(self.vel_forward[j], self.gen[i]))

    def inverse_jacobian_check(self, tol: float = 1e-9, trials: int = 100, seed: int = 0) -> Report:
        """``jac_fwd * jac_inv = 1`` plus the independent inverse-map route."""
        rep = Report(f"chart {self.name}")
        n = self.n
        prod = (self.jac_fwd * self.jac_inv)
        for i in range(n):
            for j in range(n):
                want = 1 if i == j else 0
                ok = numeric_equal(prod[i, j], want, trials, tol, seed, self.table)
                rep.add(f"(J Jinv)[{i},{j}]", want, "sampled", ok)
        if self.inverse:
            back = dict(zip(self.cart, self.forward))
            for j, inv in enumerate(self.inverse):
                for i, X in enumerate(self.cart):
                    if isinstance(inv, tuple):
                        s, c = inv
                        d = (sp.cos(self.gen[j]) * sp.diff(s, X).xreplace(back)
                             - sp.sin(self.gen[j]) * sp.diff(c, X).xreplace(back))
                    else:
                        d = sp.diff(inv, X).xreplace(back)
                    ok = numeric_equal(d, self.jac_inv[j, i], trials, tol, seed, self.table)
                    rep.add(f"d{self.gen[j]}/d{X} (inverse map)", "jac_inv", "sampled", ok)
        return rep


def identity_chart(table: SymbolTable, cart, cart_vel, name: str = "cartesian") -> CoordinateChart:
    return CoordinateChart(name, table, tuple(cart), tuple(cart_vel), tuple(cart),
                           tuple(cart_vel), tuple(cart))


def cartesian_frame(chart: CoordinateChart) -> GeneratorFrame:
    return coordinate_frame(f"{chart.name}:cartesian", chart.table, chart.cart, chart.cart_vel)


def generalized_frame(chart: CoordinateChart, n: int | None = None, name: str | None = None
                      ) -> GeneratorFrame:
    n = chart.n if n is None else n
    return coordinate_frame(name or f"{chart.name}:generalized[{n}]", chart.table,
                            chart.gen[:n], chart.gen_vel[:n])


def chain_frame(chart: CoordinateChart) -> GeneratorFrame:
    """Cartesian generators acting on coefficients written in ``(q, v)``.

    ``D_lambda_j = sum_k dq_k/dX_j d/dq_k + dv_k/dX_j d/dv_k`` and
    ``D_pi_j = sum_k dv_k/dV_j d/dv_k`` (chain rule).
    """
    n = chart.n
    gens = []
    for j, X in enumerate(chart.cart):
        der = []
        for k in range(n):
            if chart.jac_inv[k, j] != 0:
                der.append((chart.gen[k], chart.jac_inv[k, j]))
            if chart.dv_dX[k, j] != 0:
                der.append((chart.gen_vel[k], chart.dv_dX[k, j]))
        gens.append(Generator(lambda_name(X), "lambda", X.name, tuple(der),
                              rf"\lambda_{{{_latex_name(X)}}}"))
    for j, X in enumerate(chart.cart):
        der = tuple((chart.gen_vel[k], chart.jac_inv[k, j]) for k in range(n)
                    if chart.jac_inv[k, j] != 0)
        gens.append(Generator(pi_name(X), "pi", chart.cart_vel[j].name, der,
                              rf"\pi_{{{_latex_name(X)}}}"))
    return GeneratorFrame(f"{chart.name}:chain", chart.table, gens)


@dataclass
class ConjugateTransform:
    """Generalized generators in Cartesian terms, and the inverse tables.

    ``lam_q``/``pi_q`` live in the chain frame; ``lam_cart``/``pi_cart``
    express the Cartesian generators in the generalized frame.
    """

    chart: CoordinateChart
    chain: GeneratorFrame
    generalized: GeneratorFrame
    lam_q: list[OperatorExpr]
    pi_q: list[OperatorExpr]
    lam_cart: list[OperatorExpr]
    pi_cart: list[OperatorExpr]


def _sym(frame, c, gname):
    return symmetrized(OperatorExpr.scalar(frame, c), OperatorExpr.gen(frame, gname))


def conjugate_transform(chart: CoordinateChart, drop_velocity_terms: bool = False) -> ConjugateTransform:
    """Conjugate generators of the point transformation.

    ``lambda_i^(q) = sum_j (dX_j/dq_i lambda_j)_+ + (dV_j/dq_i pi_j)_+`` and
    ``pi_i^(q) = sum_j (dV_j/dv_i pi_j)_+`` with ``dV_j/dv_i = dX_j/dq_i``.
    ``drop_velocity_terms`` removes the ``pi_j`` part of ``lambda^(q)``; it
    exists only as a negative control for :func:`verify_ccr`.
    """
    n = chart.n
    chain = chain_frame(chart)
    gen = generalized_frame(chart)
    J = chart.jac_fwd
    lam_q, pi_q = [], []
    for i in range(n):
        lam = OperatorExpr.zero(chain)
        pi = OperatorExpr.zero(chain)
        for j, X in enumerate(chart.cart):
            if J[j, i] != 0:
                lam = lam + _sym(chain, J[j, i], lambda_name(X))
                pi = pi + _sym(chain, J[j, i], pi_name(X))
            dV = chart.dV_dq(j, i)
            if dV != 0 and not drop_velocity_terms:
                lam = lam + _sym(chain, dV, pi_name(X))
        lam_q.append(lam)
        pi_q.append(pi)
    lam_c, pi_c = [], []
    for j in range(n):
        lam = OperatorExpr.zero(gen)
        pi = OperatorExpr.zero(gen)
        for k, q in enumerate(chart.gen):
            if chart.jac_inv[k, j] != 0:
                lam = lam + _sym(gen, chart.jac_inv[k, j], lambda_name(q))
                pi = pi + _sym(gen, chart.jac_inv[k, j], pi_name(q))
            if chart.dv_dX[k, j] != 0:
                lam = lam + _sym(gen, chart.dv_dX[k, j], pi_name(q))
        lam_c.append(lam)
        pi_c.append(pi)
    return ConjugateTransform(chart, chain, gen, lam_q, pi_q, lam_c, pi_c)


def coordinate_probes(table: SymbolTable, q: sp.Symbol):
    """Scalar stand-ins for a coordinate in commutator checks.

    Returns ``[(f, df/dq)]``: the coordinate itself, or ``sin``/``cos`` for
    an angle, which never appears bare.
    """
    if q in table and table.info(q).kind == ANGLE:
        return [(sp.sin(q), sp.cos(q)), (sp.cos(q), -sp.sin(q))]
    return [(q, sp.Integer(1))]


def verify_ccr(chart: CoordinateChart, transform: ConjugateTransform | None = None,
               tol: float = 1e-9, trials: int = 100, seed: int = 0) -> Report:
    """Check every commutator between ``q, v, lambda^(q), pi^(q)``."""
    t = transform or conjugate_transform(chart)
    fr = t.chain
    rep = Report(f"CCR {chart.name}")
    n = chart.n

    def row(name, got: OperatorExpr, want):
        diff = got - OperatorExpr.scalar(fr, want)
        ok = diff.is_zero(tol=tol, trials=trials, seed=seed)
        rep.add(name, want, got.to_text() if ok else f"residual {diff.to_text()}", ok)

    for i in range(n):
        for f, df in coordinate_probes(chart.table, chart.gen[i]):
            F = OperatorExpr.scalar(fr, f)
            for j in range(n):
                row(f"[{f}, lambda_{chart.gen[j]}]", commutator(F, t.lam_q[j]),
                    I * df if i == j else 0)
                row(f"[{f}, pi_{chart.gen[j]}]", commutator(F, t.pi_q[j]), 0)
        Vi = OperatorExpr.scalar(fr, chart.gen_vel[i])
        for j in range(n):
            row(f"[{chart.gen_vel[i]}, pi_{chart.gen[j]}]", commutator(Vi, t.pi_q[j]),
                I if i == j else 0)
            row(f"[{chart.gen_vel[i]}, lambda_{chart.gen[j]}]", commutator(Vi, t.lam_q[j]), 0)
    for i in range(n):
        for j in range(n):
            row(f"[lambda_{chart.gen[i]}, pi_{chart.gen[j]}]", commutator(t.lam_q[i], t.pi_q[j]), 0)
            if i < j:
                row(f"[lambda_{chart.gen[i]}, lambda_{chart.gen[j]}]",
                    commutator(t.lam_q[i], t.lam_q[j]), 0)
                row(f"[pi_{chart.gen[i]}, pi_{chart.gen[j]}]", commutator(t.pi_q[i], t.pi_q[j]), 0)
    return rep
