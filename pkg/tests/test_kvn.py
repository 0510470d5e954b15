import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from opmech.kvn.flow import compile_flow
from opmech.kvn.oracle import CartesianOracle, classical_oracle, integrate_flow
from opmech.kvn.propagate import (CATMULL_ROM, KERNELS, SPLINE, CFLError, courant_number,
                                  kernel_weights, propagate, rk4_with_divergence, simulate,
                                  thread_count)
from opmech.kvn.record import TrajectoryRecord
from opmech.kvn.wavefunction import Axis, Wavefunction, expectation
from opmech.mechanics.liouvillian import derive
from opmech.scalar import canon


@pytest.fixture(scope="module")
def flows(systems, spherical):
    out = {n: compile_flow(derive(s)) for n, s in systems.items()}
    out["spherical_pendulum"] = compile_flow(derive(spherical))
    return out


def oscillator_packet(n, x0=1.0):
    axes = [Axis(-6.5, 6.5, n), Axis(-6.5, 6.5, n)]
    return Wavefunction.gaussian_grid(axes, [x0, 0.0], [1.0, 1.0], names=("x", "v_x"))


def test_flow_spot_check(flows):
    for name, f in flows.items():
        assert f.spot_check(trials=30) < 1e-12, name


def test_divergence_examples(flows, spherical):
    assert flows["harmonic_oscillator"].divergence_free
    assert flows["planar_pendulum"].divergence_free
    e = derive(spherical)
    th, vt = e.coords[0], e.vels[0]
    f = flows["spherical_pendulum"]
    assert canon(f.div_expr + 2 * vt * sp.cos(th) / sp.sin(th)) == 0
    assert not f.divergence_free


def test_gaussian_grid_moments():
    psi = oscillator_packet(128)
    x, v = sp.symbols("x v_x")
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    # the grid edge sits 5.5 widths from the centre, so the tails are cut
    assert expectation(psi, x, (x, v)) == pytest.approx(1.0, abs=1e-6)
    assert expectation(psi, (x - 1) ** 2, (x, v)) == pytest.approx(1.0, abs=1e-6)


def test_free_particle_ensemble_center(flows, systems):
    f = flows["free_particle"]
    names = [s.name for s in f.symbols]
    psi = Wavefunction.gaussian_ensemble([0.0, 0.0, 0.0, 1.5, 0.0, 0.0], 0.1, 500, seed=3,
                                         names=names)
    c0 = expectation(psi, f.symbols[0], f.symbols)
    _, rec, _ = simulate(psi, f, 0.01, 200, {"x": f.symbols[0]}, record_every=50)
    v0 = expectation(psi, f.symbols[3], f.symbols)
    assert np.allclose(rec.column("x"), c0 + v0 * rec.t, atol=1e-12)
    assert np.allclose(rec.norms, 1.0, atol=1e-12)


def test_oscillator_grid_one_period(flows):
    f = flows["harmonic_oscillator"]
    psi = oscillator_packet(128)
    _, dt = courant_number(psi, f, 1.0)
    steps = math.ceil(2 * math.pi / dt)
    out, rec, rep = simulate(psi, f, 2 * math.pi / steps, steps, {"x": f.symbols[0]},
                             record_every=steps // 4)
    assert rep.courant < 1
    assert np.allclose(rec.column("x"), np.cos(rec.t), atol=2e-3)
    assert abs(rec.norms[-1] - 1) < 1e-4
    assert rep.leakage < 1e-6


def test_grid_convergence(flows):
    f = flows["harmonic_oscillator"]
    errs = []
    for n in (48, 96):
        psi = oscillator_packet(n)
        _, dt = courant_number(psi, f, 1.0)
        steps = math.ceil(math.pi / dt)
        _, rec, _ = simulate(psi, f, math.pi / steps, steps, {"x": f.symbols[0]}, record_every=steps)
        errs.append(abs(rec.column("x")[-1] + 1))
    assert errs[1] < errs[0] / 2


@pytest.mark.parametrize("kernel", KERNELS)
def test_both_kernels_conserve_norm(flows, kernel):
    f = flows["harmonic_oscillator"]
    psi = oscillator_packet(96)
    out, rep = propagate(psi, f, 0.015, 100, kernel=kernel)
    assert abs(out.norm() - 1) < 5e-3


def test_cfl_error_and_suggestion(flows):
    f = flows["harmonic_oscillator"]
    psi = oscillator_packet(64)
    with pytest.raises(CFLError) as ei:
        simulate(psi, f, 5.0, 1)
    assert ei.value.courant >= 1
    assert ei.value.suggested_dt < 5.0
    simulate(psi, f, ei.value.suggested_dt, 1)


def test_leakage_warning(flows):
    # packet pushed against the edge of a small box
    f = flows["harmonic_oscillator"]
    axes = [Axis(-1, 1, 64), Axis(-0.3, 1, 64)]
    psi = Wavefunction.gaussian_grid(axes, [0.7, 0.0], [0.1, 0.1])
    with pytest.warns(RuntimeWarning, match="left the grid"):
        _, _, rep = simulate(psi, f, 0.02, 40)
    assert rep.leakage > 0.01


def test_thread_determinism(flows):
    f = flows["planar_pendulum"]
    axes = [Axis(-0.16, 0.16, 64), Axis(-0.5, 0.5, 64)]
    psi = Wavefunction.gaussian_grid(axes, [0.05, 0.0], [0.02, 0.06])
    a, _ = propagate(psi, f, 0.002, 20, threads=1)
    b, _ = propagate(psi, f, 0.002, 20, threads=4)
    assert np.array_equal(a.amp, b.amp)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("OPMECH_THREADS", "2")
    assert thread_count(16) == 2
    monkeypatch.delenv("OPMECH_THREADS")
    assert thread_count(3) == 3


def test_single_point_matches_plain_rk4(flows, spherical):
    f = flows["spherical_pendulum"]
    z0 = [1.0, 0.2, 0.3, math.sqrt(9.81 / math.cos(1.0))]
    _, states = integrate_flow(f, z0, 1e-3, 200)
    psi = Wavefunction.point(z0)
    out, _ = propagate(psi, f, 1e-3, 200)
    assert np.allclose(out.points[:, 0], states[-1], rtol=1e-12, atol=1e-12)


def test_ensemble_volume_keeps_norm(flows):
    f = flows["spherical_pendulum"]
    psi = Wavefunction.gaussian_ensemble([1.0, 0.0, 0.3, 2.0], 0.05, 2000, seed=1)
    out, _ = propagate(psi, f, 1e-3, 300)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    assert not np.allclose(out.vol, 1.0)


def test_symbolic_flow_matches_cartesian_oracle(flows, systems):
    f = flows["planar_pendulum"]
    q0, v0 = [0.4], [0.3]
    t, states = integrate_flow(f, q0 + v0, 1e-3, 2000, record_every=100)
    orc = classical_oracle(systems["planar_pendulum"], q0, v0, 1e-3, 2000, record_every=100)
    theta = np.arctan2(orc.X[:, 0], orc.X[:, 1])
    assert np.allclose(theta, states[:, 0], atol=1e-8)


def test_oracle_conical_orbit(spherical):
    th0 = 1.0
    w = math.sqrt(9.81 / math.cos(th0))
    orc = classical_oracle(spherical, [th0, 0.0], [0.0, w], 1e-3, 10_000, record_every=100)
    r = np.linalg.norm(orc.X, axis=1)
    theta = np.arccos(orc.X[:, 2] / r)
    assert np.max(np.abs(theta - th0)) < 1e-6
    assert np.allclose(orc.tension, w**2, rtol=1e-8)


def test_oracle_projection_stays_on_circle(systems):
    orc = CartesianOracle(systems["planar_pendulum"])
    tr = orc.run([0.6, 0.8], [0.8, -0.6], 0.01, 500)
    assert np.max(np.abs(np.linalg.norm(tr.X, axis=1) - 1)) < 1e-9


def test_record_csv(tmp_path):
    rec = TrajectoryRecord(["x"])
    rec.append(0.0, [1.0], 1.0)
    rec.append(0.5, [0.25], 1.0)
    with pytest.raises(ValueError):
        rec.append(0.5, [0.0])
    rec.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "t,x,norm"
    assert len(lines) == 3


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.sampled_from([SPLINE, CATMULL_ROM]))
def test_kernel_partition_of_unity(t, kernel):
    assert sum(kernel_weights(kernel, np.array(t))) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=2), st.floats(0.01, 1.0))
def test_rk4_exact_on_rotation_phase(z, h):
    # the oscillator flow is a rotation; RK4 preserves the radius to O(h^5)
    class Rot:
        def __call__(self, z):
            return np.stack([z[1], -z[0]])

        def divergence(self, z):
            return np.zeros(z.shape[1:])

    z = np.array(z, float)[:, None]
    zn, integral = rk4_with_divergence(Rot(), z, h)
    assert integral[0] == 0
    assert abs(np.linalg.norm(zn) - np.linalg.norm(z)) <= h**5 * np.linalg.norm(z) / 50 + 1e-15
