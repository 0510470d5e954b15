"""Compiled numeric views of a system: Cartesian forces, constraints, Gauss solve."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .dynamics import solve_gauss
from .system import SystemSpec


class UnresolvedSymbolError(ValueError):
    pass


def parameter_values(sys: SystemSpec, values: dict | None = None) -> dict:
    """Numeric values for every parameter, as a sympy substitution."""
    vals = dict(sys.values)
    vals.update(values or {})
    return {sys.table[k]: sp.Float(v, 17) if not isinstance(v, sp.Basic) else v
            for k, v in vals.items() if k in sys.table}


def lambdify_checked(args, exprs, subs: dict, module="math"):
    exprs = [sp.sympify(e).xreplace(subs) for e in exprs]
    free = set().union(*(e.free_symbols for e in exprs)) - set(args) if exprs else set()
    if free:
        raise UnresolvedSymbolError(f"no value for {sorted(map(str, free))}")
    return sp.lambdify(args, exprs, modules=module)


@dataclass
class GaussResult:
    accel: np.ndarray        # Cartesian accelerations
    multipliers: np.ndarray  # one per constraint, equal to the generalized constraint force
    force: np.ndarray        # Cartesian constraint force G^T mu
    Z: float


class CompiledSystem:
    """Numeric evaluators for the Cartesian problem and the chart."""

    def __init__(self, sys: SystemSpec, values: dict | None = None):
        self.sys = sys
        subs = parameter_values(sys, values)
        self.subs = subs
        c = sys.chart
        X, V = list(c.cart), list(c.cart_vel)
        self.masses = np.array([float(sp.sympify(m).xreplace(subs)) for m in sys.masses])
        self._force = lambdify_checked(X + V, sys.impressed_forces, subs)
        f = [sp.sympify(e) for e in sys.constraints.functions]
        self.constants = np.array([float(sp.sympify(C).xreplace(subs)) for C in sys.constraints.constants])
        self._f = lambdify_checked(X, f, subs)
        grads = [[sp.diff(fi, x) for x in X] for fi in f]
        self._grad = lambdify_checked(X, [g for row in grads for g in row], subs)
        h = [sum(sp.diff(fi, a, b) * va * vb for a, va in zip(X, V) for b, vb in zip(X, V)) for fi in f]
        self._h = lambdify_checked(X + V, h, subs)
        q, v = list(c.gen), list(c.gen_vel)
        self._fwd = lambdify_checked(q, c.forward, subs)
        self._vel = lambdify_checked(q + v, c.vel_forward, subs)
        self._jac = lambdify_checked(q, list(c.jac_fwd), subs)
        quad = [sum(sp.diff(xl, a, b) * va * vb for a, va in zip(q, v) for b, vb in zip(q, v))
                for xl in c.forward]
        self._quad = lambdify_checked(q + v, quad, subs)
        self.N = c.n
        self.l = sys.l

    # Cartesian side
    def force(self, X, V) -> np.ndarray:
        return np.array(self._force(*X, *V), dtype=float)

    def constraint(self, X) -> np.ndarray:
        return np.array(self._f(*X), dtype=float)

    def grad(self, X) -> np.ndarray:
        return np.array(self._grad(*X), dtype=float).reshape(self.l, self.N)

    def hess_term(self, X, V) -> np.ndarray:
        return np.array(self._h(*X, *V), dtype=float)

    def gauss(self, X, V) -> GaussResult:
        F = self.force(X, V)
        if self.l == 0:
            return GaussResult(F / self.masses, np.zeros(0), np.zeros(self.N), 0.0)
        G = self.grad(X)
        a, mu, Z = solve_gauss(self.masses, F, G, self.hess_term(X, V))
        return GaussResult(a, mu, G.T @ mu, Z)

    # chart side
    def full_state(self, q, v):
        """Append the constrained coordinates (``C``) and velocities (``0``)."""
        return (np.concatenate([np.asarray(q, float), self.constants]),
                np.concatenate([np.asarray(v, float), np.zeros(self.l)]))

    def to_cartesian(self, q, v):
        qf, vf = self.full_state(q, v)
        return np.array(self._fwd(*qf), float), np.array(self._vel(*qf, *vf), float)

    def jacobian(self, qfull) -> np.ndarray:
        return np.array(self._jac(*qfull), float).reshape(self.N, self.N)

    def generalized_accel(self, q, v, a_cart) -> np.ndarray:
        """``a_q = J^-1 (a_X - d2X/dq dq v v)``, first ``n`` entries."""
        qf, vf = self.full_state(q, v)
        rhs = np.asarray(a_cart, float) - np.array(self._quad(*qf, *vf), float)
        return np.linalg.solve(self.jacobian(qf), rhs)[: self.sys.n]


def gauss_oracle(sys: SystemSpec, q, v, values: dict | None = None,
                 compiled: CompiledSystem | None = None) -> tuple[np.ndarray, GaussResult]:
    """Accelerations minimizing ``Z`` at the reduced state ``(q, v)``.

    Returns the generalized accelerations and the raw Cartesian result; the
    multipliers equal the generalized constraint forces because the
    constrained coordinates are the constraint functions themselves.
    """
    cs = compiled or CompiledSystem(sys, values)
    X, V = cs.to_cartesian(q, v)
    res = cs.gauss(X, V)
    return cs.generalized_accel(q, v, res.accel), res
