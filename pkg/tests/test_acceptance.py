"""The nine acceptance criteria, one test each.

Every test records a one-line verdict; the lines are printed in the
terminal summary.  Run with ``pytest tests/test_acceptance.py``.
"""
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
import sympy as sp

from opmech.cli import main
from opmech.kvn.flow import compile_flow
from opmech.kvn.oracle import classical_oracle, integrate_flow
from opmech.kvn.propagate import CATMULL_ROM, SPLINE, courant_number, simulate
from opmech.kvn.wavefunction import Axis, Wavefunction
from opmech.mechanics.action import schwinger_onshell_residual
from opmech.mechanics.chart import conjugate_transform, verify_ccr
from opmech.mechanics.dynamics import tension
from opmech.mechanics.liouvillian import derive
from opmech.mechanics.momentum import (canonical_momentum_transform, kvn_liouvillian,
                                       minimal_coupling_check, verify_unitary_C)
from opmech.mechanics.numeric import CompiledSystem, lambdify_checked, parameter_values
from opmech.mechanics.verify import gauss_agreement, lagrange_agreement, schwinger_report
from opmech.scalar import canon

from printed_forms import preliminary_liouvillian, spherical_lambda_pi, spherical_printed_eom

RESULTS: dict[int, str] = {}
TITLES = {
    1: "spherical pendulum equivalence",
    2: "tension reproduction",
    3: "CCR suites and negative controls",
    4: "printed generator tables",
    5: "momentum-frame Liouvillian vs hermitized preliminary form",
    6: "minimal coupling",
    7: "on-shell action residual",
    8: "KvN propagation",
    9: "determinism",
}


@contextmanager
def criterion(k):
    notes = []
    try:
        yield notes
    except BaseException:
        RESULTS[k] = f"FAIL  C{k} {TITLES[k]}" + (f": {'; '.join(notes)}" if notes else "")
        raise
    RESULTS[k] = f"PASS  C{k} {TITLES[k]}" + (f": {'; '.join(notes)}" if notes else "")


# C1 / C2 share one long oracle run --------------------------------------------

Q0, V0 = [0.8, 0.0], [0.3, 2.0]
DT, STEPS, EVERY = 1e-4, 100_000, 1000


@pytest.fixture(scope="module")
def long_run(spherical):
    t0 = time.perf_counter()
    eom = derive(spherical)
    flow = compile_flow(eom)
    ts, states = integrate_flow(flow, Q0 + V0, DT, STEPS, record_every=EVERY)
    orc = classical_oracle(spherical, Q0, V0, DT, STEPS, record_every=EVERY)
    return eom, ts, states, orc, time.perf_counter() - t0


def test_c1_spherical_equivalence(spherical, long_run):
    with criterion(1) as notes:
        eom, ts, states, orc, elapsed = long_run
        lag = lagrange_agreement(spherical, eom, tol=1e-9, trials=50)
        gau = gauss_agreement(spherical, eom, tol=1e-9, trials=50)
        assert lag.passed, lag.to_text()
        assert gau.passed, gau.to_text()

        cs = CompiledSystem(spherical)
        X = np.array([cs.to_cartesian(z[:2], z[2:])[0] for z in states])
        V = np.array([cs.to_cartesian(z[:2], z[2:])[1] for z in states])
        ex = np.max(np.linalg.norm(X - orc.X, axis=1)) / np.max(np.linalg.norm(orc.X, axis=1))
        ev = np.max(np.linalg.norm(V - orc.V, axis=1)) / np.max(np.linalg.norm(orc.V, axis=1))
        notes.append(f"trajectory rel. error X {ex:.2e}, V {ev:.2e} over {ts[-1]:g} s")
        notes.append(f"runtime {elapsed:.1f} s")

        # printed closed forms against the derivation
        t = spherical.table
        th, vp = t["theta"], t["v_phi"]
        printed = spherical_printed_eom(t)
        T = tension(spherical, eom)
        found = []
        for key, got, fix in (
                ("dv_theta/dt", eom.accel[0], {vp: vp**2}),
                ("dv_phi/dt", eom.accel[1], {}),
                ("T", T, {sp.sin(th): sp.sin(th) ** 2})):
            p = printed[key]
            if canon(p - got) != 0:
                repaired = p.xreplace(fix) if fix else p
                assert canon(repaired - got) == 0, f"{key}: printed form not a known typo"
                found.append(key)
        notes.append("printed typos: " + (", ".join(found) if found else "none"))
        assert found == ["dv_theta/dt", "T"]
        assert ex <= 1e-6 and ev <= 1e-6
        assert elapsed < 60


def test_c2_tension(spherical, long_run):
    with criterion(2) as notes:
        eom, ts, states, orc, _ = long_run
        subs = parameter_values(spherical)
        Tf = lambdify_checked(list(eom.coords) + list(eom.vels), [tension(spherical, eom)], subs)
        # reduced state recovered from the oracle's Cartesian data
        cs = CompiledSystem(spherical)
        errs = []
        for X, V, Tor in zip(orc.X, orc.V, orc.tension):
            r = np.linalg.norm(X)
            q = np.array([math.acos(X[2] / r), math.atan2(X[1], X[0]), r])
            v = np.linalg.solve(cs.jacobian(q), V)
            Ts = Tf(q[0], q[1], v[0], v[1])[0]
            errs.append(abs(Ts - Tor[0]) / (1 + abs(Tor[0])))
        e_traj = max(errs)
        notes.append(f"along trajectory {e_traj:.2e}")

        th0 = 1.0
        w = math.sqrt(9.81 / math.cos(th0))
        m, R = float(subs[spherical.table["m"]]), float(subs[spherical.table["R"]])
        want = m * R * w**2
        e_sym = abs(Tf(th0, 0.0, 0.0, w)[0] - want) / want
        cone = classical_oracle(spherical, [th0, 0.0], [0.0, w], 1e-3, 2000, record_every=100)
        e_orc = float(np.max(np.abs(cone.tension[:, 0] - want)) / want)
        notes.append(f"conical symbolic {e_sym:.1e}, oracle {e_orc:.1e}")
        assert e_traj <= 1e-6
        assert e_sym <= 1e-8 and e_orc <= 1e-8


def test_c3_ccr(systems, spherical):
    with criterion(3) as notes:
        rep = verify_ccr(spherical.chart, tol=1e-9, trials=100)
        assert rep.passed, rep.to_text()
        rows = len(rep.rows)
        for name, s in systems.items():
            r = canonical_momentum_transform(s, tol=1e-9, trials=100).report
            assert r.passed, r.to_text()
            rows += len(r.rows)
        broken = verify_ccr(spherical.chart, conjugate_transform(spherical.chart, drop_velocity_terms=True))
        assert not broken.passed
        mutated = 0
        for s in (spherical, systems["charged_particle"]):
            for mut in ("bare_lambda", "unscaled_pi"):
                assert not canonical_momentum_transform(s, mutation=mut).report.passed
                mutated += 1
        notes.append(f"{rows} commutators pass; {mutated + 1} mutated transforms fail")


def test_c4_generator_tables(spherical):
    with criterion(4) as notes:
        t = conjugate_transform(spherical.chart)
        printed = spherical_lambda_pi(t.generalized, spherical.table)
        computed = {**{f"lambda_{a}": t.lam_cart[j] for j, a in enumerate("xyz")},
                    **{f"pi_{a}": t.pi_cart[j] for j, a in enumerate("xyz")}}
        bad = [k for k in computed if not (computed[k] - printed[k]).is_zero(tol=1e-9)]
        notes.append(f"{6 - len(bad)}/6 match" + (f", differ: {', '.join(bad)}" if bad else ""))
        assert bad == []


def test_c5_momentum_liouvillian(systems):
    with criterion(5) as notes:
        for name in ("harmonic_oscillator", "planar_pendulum"):
            s = systems[name]
            diff = (kvn_liouvillian(s) - preliminary_liouvillian(s)).conjugate_part()
            assert diff.is_zero(tol=1e-9), (name, diff.to_text())
        notes.append("oscillator and planar pendulum conjugate-free")


def test_c6_minimal_coupling(systems):
    with criterion(6):
        s = systems["charged_particle"]
        for rep in (minimal_coupling_check(s, tol=1e-9), verify_unitary_C(s, tol=1e-9)):
            assert rep.passed, rep.to_text()


def test_c7_schwinger(systems, spherical):
    with criterion(7):
        for name in ("free_particle", "harmonic_oscillator"):
            res = schwinger_onshell_residual(systems[name])
            assert res.operator.is_zero(numeric=False), name
        for s in (systems["planar_pendulum"], spherical):
            rep = schwinger_report(s, derive(s), tol=1e-9)
            assert rep.passed, rep.to_text()


def _oscillator_run(flow, n, kernel, T):
    psi = Wavefunction.gaussian_grid([Axis(-6.5, 6.5, n)] * 2, [1.0, 0.0], [1.0, 1.0])
    _, dt = courant_number(psi, flow, 1.0)
    steps = math.ceil(T / dt)
    _, rec, _ = simulate(psi, flow, T / steps, steps, {"x": flow.symbols[0]},
                         record_every=max(1, steps // 60), kernel=kernel)
    err = float(np.max(np.abs(rec.column("x") - np.cos(rec.t))))
    drift = float(np.max(np.abs(np.array(rec.norms) - rec.norms[0]))) / T
    return err, drift


def _crossing_times(t, y):
    out = []
    for k in range(len(y) - 1):
        if y[k] > 0 >= y[k + 1] or y[k] < 0 <= y[k + 1]:
            out.append(t[k] - y[k] * (t[k + 1] - t[k]) / (y[k + 1] - y[k]))
    return np.array(out)


def test_c8_propagation(systems):
    with criterion(8) as notes:
        flow = compile_flow(derive(systems["harmonic_oscillator"]))
        T = 6 * math.pi
        t0 = time.perf_counter()
        err, drift = _oscillator_run(flow, 256, SPLINE, T)
        elapsed = time.perf_counter() - t0
        coarse, _ = _oscillator_run(flow, 128, SPLINE, T)
        order = math.log2(coarse / err)
        cr_err, cr_drift = _oscillator_run(flow, 256, CATMULL_ROM, T)
        notes.append(f"256^2 <X> err {err:.1e}, drift {drift:.1e}/t, {elapsed:.0f} s")
        notes.append(f"observed order {order:.2f}")
        notes.append(f"catmull-rom err {cr_err:.1e}, drift {cr_drift:.1e}/t")

        pp = systems["planar_pendulum"]
        pflow = compile_flow(derive(pp))
        axes = [Axis(-0.16, 0.16, 256), Axis(-0.5, 0.5, 256)]
        psi = Wavefunction.gaussian_grid(axes, [0.05, 0.0], [0.02, 0.06])
        _, dt = courant_number(psi, pflow, 1.0)
        steps = math.ceil(4.0 / dt)
        _, rec, _ = simulate(psi, pflow, 4.0 / steps, steps, {"theta": pflow.symbols[0]})
        cross = _crossing_times(rec.t, rec.column("theta"))
        omega = math.pi / float(np.mean(np.diff(cross)))
        want = math.sqrt(9.81 / 1.0)
        rel = abs(omega - want) / want
        notes.append(f"pendulum frequency off by {rel:.2%}")
        assert drift <= 1e-6 and err <= 1e-3
        assert coarse / err >= 4
        assert elapsed < 120
        assert rel < 0.01


def test_c9_determinism(tmp_path):
    with criterion(9) as notes:
        runs = {
            "grid": ["--system", "builtin:planar_pendulum", "--grid", "64", "--t-final", "0.5"],
            "ensemble": ["--system", "builtin:spherical_pendulum", "--points", "2000",
                         "--t-final", "0.1", "--seed", "11"],
        }
        for label, args in runs.items():
            blobs = []
            for k in range(3):
                out = tmp_path / f"{label}{k}"
                assert main(["simulate", *args, "--out", str(out)]) == 0
                blobs.append((out / "trajectory.csv").read_bytes())
            assert blobs[0] == blobs[1] == blobs[2], label
        notes.append("grid and ensemble CSVs byte-identical over 3 runs")
