"""On-shell check of the Schwinger action Lagrangian."""
from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from ..operators import OperatorExpr, symmetrized
from ..scalar import canon
from .chart import chain_frame, pi_name
from .liouvillian import DerivedEOM, derive
from .system import SystemSpec


@dataclass
class SchwingerResidual:
    """``sum ((dV_j/dt - F_j/m_j) pi_j)_+`` with the derived accelerations.

    ``operator`` lives in the chain frame (Cartesian generators, coefficients
    in ``q, v``); ``generalized`` lists the coefficient of each generalized
    ``pi^(q)`` after rewriting the Cartesian ``pi`` through the chart.
    """

    operator: OperatorExpr
    cartesian: tuple[sp.Expr, ...]
    generalized: tuple[sp.Expr, ...]


def cartesian_accelerations(sys: SystemSpec, eom: DerivedEOM) -> tuple[sp.Expr, ...]:
    """``dV_l/dt = sum_j J_lj a_j + sum_jk d2X_l/dq_j dq_k v_j v_k`` on the manifold."""
    chart = sys.chart
    N, n = chart.n, sys.n
    J = chart.jac_fwd
    q, v = chart.gen, chart.gen_vel
    a = list(eom.accel) + [0] * (N - n)
    out = []
    for l in range(N):
        e = sum(J[l, j] * a[j] for j in range(N))
        e += sum(sp.diff(chart.forward[l], q[j], q[k]) * v[j] * v[k] for j in range(N) for k in range(N))
        out.append(sys.on_tq(e))
    return tuple(out)


def schwinger_onshell_residual(sys: SystemSpec, eom: DerivedEOM | None = None) -> SchwingerResidual:
    eom = eom or derive(sys)
    chart = sys.chart
    fr = sys._cache.get("chain") or sys._cache.setdefault("chain", chain_frame(chart))
    dV = cartesian_accelerations(sys, eom)
    F = [sys.on_tq(chart.to_chart(f)) for f in sys.impressed_forces]
    coeffs = tuple(canon(dV[l] - F[l] / sys.masses[l]) for l in range(chart.n))
    op = OperatorExpr.zero(fr)
    for l, X in enumerate(chart.cart):
        if coeffs[l] != 0:
            op = op + symmetrized(OperatorExpr.scalar(fr, coeffs[l]), OperatorExpr.gen(fr, pi_name(X)))
    op = op.map_coefficients(sys.on_tq)
    Jinv = chart.jac_inv
    gen = tuple(sys.on_tq(sum(coeffs[l] * Jinv[k, l] for l in range(chart.n))) for k in range(chart.n))
    return SchwingerResidual(op, coeffs, gen)
