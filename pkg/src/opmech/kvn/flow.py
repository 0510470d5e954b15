"""Lowering derived equations of motion to numeric phase-space flows."""
from __future__ import annotations

import numpy as np
import sympy as sp

from ..mechanics.liouvillian import DerivedEOM
from ..mechanics.numeric import lambdify_checked, parameter_values
from ..scalar import canon, evaluate


class FlowField:
    """Right-hand side ``dz/dt = f(z)`` with ``z = (q, v)`` and its divergence.

    ``__call__`` works on arrays shaped ``(d, ...)``; ``point`` is a fast
    scalar path used by trajectory integrators.
    """

    def __init__(self, symbols, rhs, divergence, subs: dict, table=None, names=None):
        self.symbols = tuple(symbols)
        self.rhs_exprs = tuple(sp.sympify(e) for e in rhs)
        self.div_expr = sp.sympify(divergence)
        self.subs = subs
        self.table = table
        self.names = tuple(names or (s.name for s in self.symbols))
        args = list(self.symbols)
        self._vec = lambdify_checked(args, self.rhs_exprs, subs, "numpy")
        self._div = lambdify_checked(args, [self.div_expr], subs, "numpy")
        self._pt = lambdify_checked(args, self.rhs_exprs, subs, "math")
        self._pt_div = lambdify_checked(args, [self.div_expr], subs, "math")

    @property
    def dim(self) -> int:
        return len(self.symbols)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        shape = z.shape[1:]
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape)
                         for c in self._vec(*z)])

    def divergence(self, z: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self._div(*z)[0], dtype=float), z.shape[1:])

    def point(self, z) -> list[float]:
        return self._pt(*z)

    def point_divergence(self, z) -> float:
        return self._pt_div(*z)[0]

    @property
    def divergence_free(self) -> bool:
        return sp.simplify(self.div_expr) == 0

    def spot_check(self, trials: int = 100, tol: float = 1e-12, seed: int = 0) -> float:
        """Largest relative gap between compiled and symbolic evaluation."""
        exprs = [e.xreplace(self.subs) for e in self.rhs_exprs] + [self.div_expr.xreplace(self.subs)]
        pts, vals = evaluate(exprs + list(self.symbols), self.table, trials, seed)
        z = np.array([pts[s] for s in self.symbols])
        got = np.concatenate([self(z), self.divergence(z)[None]])
        # reference values from sympy's own arbitrary-precision evaluator
        want = np.array([[float(sp.re(e.evalf(30, subs=dict(zip(self.symbols, z[:, k])))))
                          for k in range(z.shape[1])] for e in exprs])
        return float(np.max(np.abs(got - want) / (1 + np.abs(want))))


def compile_flow(eom: DerivedEOM, values: dict | None = None) -> FlowField:
    """Compile ``(dq/dt, dv/dt)`` and the symbolic divergence ``sum d f_k / d z_k``."""
    syms = eom.state_symbols()
    rhs = eom.rhs()
    for e in rhs:
        if not isinstance(e, sp.Expr):
            raise TypeError("equations of motion must be scalar expressions")
    div = canon(sum(sp.diff(f, s) for f, s in zip(rhs, syms)))
    subs = parameter_values(eom.system, values)
    return FlowField(syms, rhs, div, subs, eom.system.table)
