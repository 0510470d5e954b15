"""Lagrange equations, constraint forces, Euler-Lagrange superoperators."""
from __future__ import annotations

import numpy as np
import sympy as sp

from ..operators import OperatorExpr, commutator
from ..scalar import canon
from .chart import lambda_name, pi_name
from .liouvillian import DerivationError, DerivedEOM, liouvillian
from .system import SystemSpec

I = sp.I


class SingularMetricError(DerivationError):
    pass


def _simp(e):
    return canon(sp.simplify(e))


def kinetic_metric(sys: SystemSpec, reduced: bool = True) -> sp.Matrix:
    """``m_ij = sum_l m_l dX_l/dq_i dX_l/dq_j``; reduced means on the constraint manifold."""
    key = ("metric", reduced)
    if key in sys._cache:
        return sys._cache[key]
    J = sys.chart.jac_fwd
    N = sys.chart.n
    M = sp.zeros(N, N)
    for i in range(N):
        for j in range(i, N):
            M[i, j] = M[j, i] = _simp(sum(sys.masses[l] * J[l, i] * J[l, j] for l in range(N)))
    if reduced:
        M = M[: sys.n, : sys.n].applyfunc(sys.on_tq)
    sys._cache[key] = M
    return M


def inverse_metric(sys: SystemSpec) -> sp.Matrix:
    if "metric_inv" not in sys._cache:
        M = kinetic_metric(sys)
        if sp.simplify(M.det()) == 0:
            raise SingularMetricError("kinetic metric is singular")
        sys._cache["metric_inv"] = M.inv().applyfunc(_simp)
    return sys._cache["metric_inv"]


def generalized_forces(sys: SystemSpec, reduced: bool = True) -> tuple[sp.Expr, ...]:
    """``Q_i = sum_l F_l dX_l/dq_i``."""
    J = sys.chart.jac_fwd
    F = [sys.chart.to_chart(f) for f in sys.impressed_forces]
    N = sys.chart.n
    Q = [_simp(sum(F[l] * J[l, i] for l in range(N))) for i in range(N)]
    if reduced:
        Q = [sys.on_tq(e) for e in Q[: sys.n]]
    return tuple(Q)


def christoffel_terms(sys: SystemSpec) -> tuple[sp.Expr, ...]:
    """``sum_jk (d_k m_ij - 1/2 d_i m_jk) v_j v_k`` over the full chart."""
    M = kinetic_metric(sys, reduced=False)
    q, v = sys.chart.gen, sys.chart.gen_vel
    N = sys.chart.n
    out = []
    for i in range(N):
        acc = 0
        for j in range(N):
            for k in range(N):
                acc += (sp.diff(M[i, j], q[k]) - sp.Rational(1, 2) * sp.diff(M[j, k], q[i])) * v[j] * v[k]
        out.append(_simp(acc))
    return tuple(out)


def lagrange_equations(sys: SystemSpec) -> DerivedEOM:
    """Solve ``M a + Gamma = Q`` on the constraint manifold for ``a``.

    This route never touches operators: it is the classical metric
    computation that the Heisenberg equations must reproduce.
    """
    n = sys.n
    G = [sys.on_tq(g) for g in christoffel_terms(sys)[:n]]
    Q = generalized_forces(sys)
    Minv = inverse_metric(sys)
    rhs = sp.Matrix([Q[i] - G[i] for i in range(n)])
    a = (Minv * rhs).applyfunc(_simp)
    return DerivedEOM(sys, sys.coords, sys.vels, sys.vels, tuple(a), source="lagrange")


def constraint_forces(sys: SystemSpec, eom: DerivedEOM) -> tuple[sp.Expr, ...]:
    """Generalized constraint forces along the constrained coordinates.

    Newton's law projected on ``dX/dq_i``:
    ``R_i = sum_l dX_l/dq_i (m_l dV_l/dt - F_l)`` with
    ``dV_l/dt = sum_j J_lj a_j + sum_jk d2X_l/dq_j dq_k v_j v_k``.
    For orthogonal charts the acceleration term drops out.
    """
    if sys.l == 0:
        return ()
    chart = sys.chart
    N, n = chart.n, sys.n
    J = chart.jac_fwd
    q, v = chart.gen, chart.gen_vel
    a = list(eom.accel) + [0] * (N - n)
    F = [chart.to_chart(f) for f in sys.impressed_forces]
    out = []
    for i in range(n, N):
        acc = 0
        for l in range(N):
            dV = sum(J[l, j] * a[j] for j in range(N))
            dV += sum(sp.diff(chart.forward[l], q[j], q[k]) * v[j] * v[k]
                      for j in range(N) for k in range(N))
            acc += J[l, i] * (sys.masses[l] * dV - F[l])
        out.append(sys.on_tq(_simp(sys.on_tq(acc))))
    return tuple(out)


def tension(sys: SystemSpec, eom: DerivedEOM) -> sp.Expr:
    """Pull of a single distance constraint, ``T = -R``, positive when taut."""
    if sys.l != 1:
        raise ValueError("tension is defined for a single constraint")
    return canon(-eom.constraint_forces[0])


def cartesian_constraint_forces(sys: SystemSpec, eom: DerivedEOM) -> tuple[sp.Expr, ...]:
    """Cartesian components from generalized ones, orthogonal charts only.

    For an ideal force normal to the constraint surface and an orthogonal
    chart, ``R_l = sum_c R_c dq_c/dX_l``.
    """
    M = kinetic_metric(sys, reduced=False)
    n, N = sys.n, sys.chart.n
    if any(M[i, c] != 0 for i in range(n) for c in range(n, N)):
        raise DerivationError("Cartesian reconstruction needs an orthogonal chart")
    Jinv = sys.chart.jac_inv
    return tuple(sys.on_tq(sum(eom.constraint_forces[c - n] * Jinv[c, l] for c in range(n, N)))
                 for l in range(N))


def lagrangian_operator(sys: SystemSpec, frame=None, kinetic_only: bool = False) -> OperatorExpr:
    """``L = T - U`` as a scalar operator on the reduced frame."""
    fr = frame or sys.reduced_frame
    M = kinetic_metric(sys)
    v = sys.vels
    T = sp.Rational(1, 2) * sum(M[i, j] * v[i] * v[j] for i in range(sys.n) for j in range(sys.n))
    lag = T
    if not kinetic_only and sys.has_potential:
        lag = lag - sys.on_tq(sys.chart.to_chart(sys.generalized_potential()))
    return OperatorExpr.scalar(fr, _simp(lag))


def euler_lagrange_apply(sys: SystemSpec, j: int, lag: OperatorExpr | None = None,
                         L: OperatorExpr | None = None) -> OperatorExpr:
    """``Phi_j[lag] = -[L, [pi_j, lag]] - i[lambda_j, lag]``."""
    L = L if L is not None else liouvillian(sys)
    fr = L.frame
    lag = lag if lag is not None else lagrangian_operator(sys, fr)
    q = sys.coords[j]
    pi = OperatorExpr.gen(fr, pi_name(q))
    lam = OperatorExpr.gen(fr, lambda_name(q))
    return -commutator(L, commutator(pi, lag)) - I * commutator(lam, lag)


def canonical_momentum_from_lagrangian(sys: SystemSpec, j: int, lag: OperatorExpr | None = None
                                       ) -> sp.Expr:
    """``p_j = i[pi_j, lag]``."""
    fr = sys.reduced_frame
    lag = lag if lag is not None else lagrangian_operator(sys, fr)
    p = I * commutator(OperatorExpr.gen(fr, pi_name(sys.coords[j])), lag)
    return p.coeff()


# numeric oracle -----------------------------------------------------------

def solve_gauss(masses, F, grad, hess_terms):
    """Minimize ``Z = sum (m a - F)^2 / m`` subject to ``G a = -h``.

    ``grad`` is the ``l x N`` constraint Jacobian, ``hess_terms`` the vector
    ``h_c = V^T H_c V``.  Returns ``(a, mu, Z)``; the constraint force is
    ``G^T mu``.
    """
    m = np.asarray(masses, dtype=float)
    F = np.asarray(F, dtype=float)
    G = np.atleast_2d(np.asarray(grad, dtype=float))
    h = np.asarray(hess_terms, dtype=float).reshape(-1)
    if G.size == 0 or G.shape[0] == 0:
        a = F / m
        return a, np.zeros(0), 0.0
    A = (G / m) @ G.T
    if np.linalg.matrix_rank(A) < G.shape[0]:
        raise DerivationError("constraint Jacobian is rank deficient")
    mu = np.linalg.solve(A, -h - G @ (F / m))
    a = (F + G.T @ mu) / m
    Z = float(np.sum((m * a - F) ** 2 / m))
    return a, mu, Z
