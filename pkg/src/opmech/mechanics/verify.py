"""All invariants of a system gathered into one report."""
from __future__ import annotations

import numpy as np

from ..scalar import canon, evaluate, numeric_equal, to_text
from .action import schwinger_onshell_residual
from .chart import verify_ccr
from .dynamics import cartesian_constraint_forces, lagrange_equations
from .liouvillian import DerivationError, DerivedEOM, derive
from .momentum import (momentum_frame_equivalence, canonical_momentum_transform,
                       minimal_coupling_check, verify_unitary_C)
from .numeric import CompiledSystem, gauss_oracle, lambdify_checked, parameter_values
from .report import Report
from .system import SystemSpec


def lagrange_agreement(sys: SystemSpec, eom: DerivedEOM, tol=1e-9, trials=100, seed=0) -> Report:
    rep = Report(f"Heisenberg vs Lagrange {sys.name}")
    lag = lagrange_equations(sys)
    for w, a, b in zip(eom.vels, eom.accel, lag.accel):
        ok = canon(a - b) == 0 or numeric_equal(a, b, trials, tol, seed, sys.table)
        rep.add(f"d{w}/dt", b, a, ok)
    return rep


def sample_states(sys: SystemSpec, eom: DerivedEOM, trials: int, seed: int):
    """Pole-free reduced states ``(q, v)`` shaped ``(trials, n)``."""
    syms = list(eom.coords) + list(eom.vels)
    exprs = list(eom.accel) + syms
    pts, _ = evaluate(exprs, sys.table, trials, seed)
    return np.array([pts[s] for s in eom.coords]).T, np.array([pts[s] for s in eom.vels]).T


def gauss_agreement(sys: SystemSpec, eom: DerivedEOM, tol=1e-9, trials=50, seed=0,
                    values: dict | None = None) -> Report:
    """Symbolic accelerations and constraint forces against the Gauss minimizer."""
    rep = Report(f"Heisenberg vs Gauss {sys.name}")
    subs = parameter_values(sys, values)
    args = list(eom.coords) + list(eom.vels)
    acc = lambdify_checked(args, eom.accel, subs)
    R = lambdify_checked(args, eom.constraint_forces, subs) if sys.l else None
    cs = CompiledSystem(sys, values)
    Q, Vs = sample_states(sys, eom, trials, seed)
    err_a = err_r = 0.0
    for q, v in zip(Q, Vs):
        a_gauss, res = gauss_oracle(sys, q, v, compiled=cs)
        a_sym = np.array(acc(*q, *v), float)
        err_a = max(err_a, float(np.max(np.abs(a_sym - a_gauss) / (1 + np.abs(a_gauss)))))
        if R is not None:
            r_sym = np.array(R(*q, *v), float)
            err_r = max(err_r, float(np.max(np.abs(r_sym - res.multipliers)
                                            / (1 + np.abs(res.multipliers)))))
    rep.add(f"accelerations at {trials} states", f"<= {tol:g}", f"{err_a:.3g}", err_a <= tol)
    if R is not None:
        rep.add(f"constraint forces at {trials} states", f"<= {tol:g}", f"{err_r:.3g}", err_r <= tol)
    return rep


def schwinger_report(sys: SystemSpec, eom: DerivedEOM, tol=1e-9, trials=100, seed=0) -> Report:
    """Unconstrained: residual vanishes.  Constrained: coefficients are ``R_l / m_l``."""
    rep = Report(f"Schwinger residual {sys.name}")
    res = schwinger_onshell_residual(sys, eom)
    if sys.l == 0:
        for X, c in zip(sys.chart.cart, res.cartesian):
            rep.add(f"pi_{X} coefficient", 0, c, canon(c) == 0)
        return rep
    try:
        Rc = cartesian_constraint_forces(sys, eom)
    except DerivationError as exc:
        rep.add("constraint-force comparison", "orthogonal chart", str(exc), False)
        return rep
    for X, c, r, m in zip(sys.chart.cart, res.cartesian, Rc, sys.masses):
        want = canon(r / m)
        ok = canon(c - want) == 0 or numeric_equal(c, want, trials, tol, seed, sys.table)
        rep.add(f"pi_{X} coefficient", want, c, ok)
    return rep


def run_checks(sys: SystemSpec, tol: float = 1e-9, trials: int = 100, seed: int = 0) -> Report:
    rep = Report(f"checks {sys.name}")
    eom = derive(sys)
    if sys.l:
        ok = sys.check_constraint_coordinates(tol, trials, seed)
        rep.add("constrained coordinates equal constraint functions", True, ok, ok)
    if not sys.chart.is_identity:
        rep.extend(sys.chart.inverse_jacobian_check(tol, trials, seed), "chart")
        rep.extend(verify_ccr(sys.chart, tol=tol, trials=trials, seed=seed), "CCR")
    rep.extend(canonical_momentum_transform(sys, tol=tol, trials=trials, seed=seed).report,
               "momentum CCR")
    rep.extend(lagrange_agreement(sys, eom, tol, trials, seed), "Lagrange")
    rep.extend(gauss_agreement(sys, eom, tol, min(trials, 50), seed), "Gauss")
    if sys.vector_potential is None:
        rep.extend(momentum_frame_equivalence(sys, tol, trials, seed), "momentum frame")
    else:
        rep.extend(verify_unitary_C(sys, tol, trials, seed), "unitary C")
        rep.extend(minimal_coupling_check(sys, tol, trials, seed), "minimal coupling")
    rep.extend(schwinger_report(sys, eom, tol, trials, seed), "Schwinger")
    return rep


def momentum_lines(sys: SystemSpec) -> list[str]:
    """``p_q = ...`` in the grammar, with Cartesian ``A_x`` kept symbolic for identity charts."""
    mt = canonical_momentum_transform(sys)
    out = []
    if sys.vector_potential is not None and sys.chart.is_identity:
        for X, V, m in zip(sys.chart.cart, sys.chart.cart_vel, sys.masses):
            out.append(f"p_{X} = {to_text(m * V)} + A_{X}")
        out.append("")
        for X, a in zip(sys.chart.cart, sys.vector_potential):
            out.append(f"A_{X} = {to_text(canon(a))}")
        out.append("")
    for q, p in zip(sys.coords, mt.p):
        out.append(f"p_{q} = {to_text(p)}")
    return out

