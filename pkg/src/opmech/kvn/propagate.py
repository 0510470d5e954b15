"""Semi-Lagrangian and ensemble propagation of phase-space amplitudes.

The amplitude obeys ``d psi/dt = -f . grad psi - (div f / 2) psi`` (the
hermitized Liouvillian), so along a characteristic it is multiplied by
``exp(-1/2 int div f dt)``; for divergence-free flows it is simply carried.
"""
from __future__ import annotations

import itertools
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy import ndimage

from .flow import FlowField
from .record import TrajectoryRecord
from .wavefunction import ENSEMBLE, GRID, Wavefunction, observable_function

SPLINE = "cubic-spline"
CATMULL_ROM = "catmull-rom"
KERNELS = (SPLINE, CATMULL_ROM)
MAX_CACHED_NNZ = 60_000_000
LEAK_WARN = 0.01


class CFLError(ValueError):
    def __init__(self, courant: float, suggested_dt: float):
        super().__init__(f"Courant number {courant:.3g} >= 1; use dt <= {suggested_dt:.6g}")
        self.courant = courant
        self.suggested_dt = suggested_dt


@dataclass
class PropagationReport:
    steps: int = 0
    dt: float = 0.0
    courant: float = 0.0
    leakage: float = 0.0
    warnings: list[str] = field(default_factory=list)


def thread_count(threads: int | None = None) -> int:
    n = threads or os.cpu_count() or 1
    cap = os.environ.get("OPMECH_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _pmap(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def rk4_with_divergence(flow: FlowField, z: np.ndarray, h: float):
    """One RK4 step of ``dz/ds = f`` with step ``h``, plus ``int div f |ds|``."""
    k1, d1 = flow(z), flow.divergence(z)
    z2 = z + 0.5 * h * k1
    k2, d2 = flow(z2), flow.divergence(z2)
    z3 = z + 0.5 * h * k2
    k3, d3 = flow(z3), flow.divergence(z3)
    z4 = z + h * k3
    k4, d4 = flow(z4), flow.divergence(z4)
    znew = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    integral = abs(h) / 6 * (d1 + 2 * d2 + 2 * d3 + d4)
    return znew, integral


def kernel_weights(kernel: str, t: np.ndarray):
    t2 = t * t
    t3 = t2 * t
    if kernel == CATMULL_ROM:
        return (-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1,
                -1.5 * t3 + 2 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2)
    if kernel == SPLINE:
        s = 1 - t
        return (s**3 / 6, (3 * t3 - 6 * t2 + 4) / 6, (-3 * t3 + 3 * t2 + 3 * t + 1) / 6, t3 / 6)
    raise ValueError(f"unknown kernel {kernel!r}; choose from {KERNELS}")


def _axis_taps(kernel: str, u: np.ndarray, n: int):
    """Indices and weights of the four taps along one axis.

    Catmull-Rom treats everything beyond the grid as zero; the spline uses
    mirror boundaries to match its prefilter.
    """
    i0 = np.floor(u).astype(np.int64)
    i0 = np.clip(i0, 0, n - 2)
    w = kernel_weights(kernel, u - i0)
    idx, wts = [], []
    for a in range(4):
        i = i0 + a - 1
        if kernel == SPLINE:
            i = np.abs(i)
            i = np.where(i > n - 1, 2 * (n - 1) - i, i)
            wa = w[a]
        else:
            out = (i < 0) | (i > n - 1)
            wa = np.where(out, 0.0, w[a])
            i = np.clip(i, 0, n - 1)
        idx.append(i)
        wts.append(wa)
    return idx, wts


def prefilter(amp: np.ndarray, kernel: str) -> np.ndarray:
    if kernel != SPLINE:
        return amp
    re = ndimage.spline_filter(amp.real, order=3, mode="mirror")
    if not np.any(amp.imag):
        return re.astype(complex)
    return re + 1j * ndimage.spline_filter(amp.imag, order=3, mode="mirror")


class _GridStepper:
    """Precomputes the characteristic feet; one step is then a sparse product."""

    def __init__(self, psi: Wavefunction, flow: FlowField, dt: float, kernel: str, threads: int):
        if flow.dim != psi.dim:
            raise ValueError("flow and wavefunction dimensions differ")
        self.psi_axes = psi.axes
        self.shape = psi.amp.shape
        self.kernel = kernel
        self.flow = flow
        self.dt = dt
        self.threads = threads
        mesh = psi.mesh().reshape(psi.dim, -1)
        P = mesh.shape[1]
        nchunks = max(threads, -(-P // 65536))
        bounds = np.linspace(0, P, nchunks + 1).astype(int)
        self.chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        self.mesh = mesh
        self.cache = P * 4 ** psi.dim <= MAX_CACHED_NNZ
        self.blocks = _pmap(self._build, self.chunks, threads) if self.cache else None
        # cells whose forward characteristic leaves the grid, for leakage accounting
        fwd, _ = rk4_with_divergence(flow, mesh, dt)
        self.exit_mask = ~self._inside(fwd)

    def _inside(self, z):
        ok = np.ones(z.shape[1], dtype=bool)
        for k, ax in enumerate(self.psi_axes):
            ok &= (z[k] >= ax.lo) & (z[k] <= ax.hi)
        return ok

    def _build(self, chunk):
        a, b = chunk
        z = self.mesh[:, a:b]
        foot, integral = rk4_with_divergence(self.flow, z, -self.dt)
        inside = self._inside(foot)
        factor = np.where(inside, np.exp(-0.5 * integral), 0.0)
        taps = [_axis_taps(self.kernel, (foot[k] - ax.lo) / ax.step, ax.n)
                for k, ax in enumerate(self.psi_axes)]
        rows = np.arange(b - a)
        R, C, V = [], [], []
        for combo in itertools.product(range(4), repeat=len(taps)):
            w = factor.copy()
            flat = np.zeros(b - a, dtype=np.int64)
            for k, c in enumerate(combo):
                w *= taps[k][1][c]
                flat = flat * self.psi_axes[k].n + taps[k][0][c]
            keep = w != 0
            R.append(rows[keep])
            C.append(flat[keep])
            V.append(w[keep])
        P = self.mesh.shape[1]
        return sps.csr_matrix((np.concatenate(V), (np.concatenate(R), np.concatenate(C))),
                              shape=(b - a, P))

    def step(self, amp: np.ndarray) -> np.ndarray:
        coeff = prefilter(amp, self.kernel).ravel()
        if self.cache:
            parts = _pmap(lambda B: B @ coeff, self.blocks, self.threads)
        else:
            parts = _pmap(lambda ch: self._build(ch) @ coeff, self.chunks, self.threads)
        return np.concatenate(parts).reshape(self.shape)


def courant_number(psi: Wavefunction, flow: FlowField, dt: float) -> tuple[float, float]:
    """``dt * max_k max |f_k| / dz_k`` over the grid and the largest stable dt."""
    z = psi.mesh().reshape(psi.dim, -1)
    f = np.abs(flow(z))
    rate = max(float(np.max(f[k])) / ax.step for k, ax in enumerate(psi.axes))
    if rate == 0:
        return 0.0, float("inf")
    return float(dt * rate), 0.9 / rate


def _ensemble_step(flow, psi: Wavefunction, dt, threads):
    K = psi.points.shape[1]
    nchunks = max(1, min(threads, -(-K // 4096)))
    bounds = np.linspace(0, K, nchunks + 1).astype(int)

    def work(ab):
        a, b = ab
        return rk4_with_divergence(flow, psi.points[:, a:b], dt)

    res = _pmap(work, list(zip(bounds[:-1], bounds[1:])), threads)
    pts = np.concatenate([r[0] for r in res], axis=1)
    integral = np.concatenate([r[1] for r in res])
    psi.points = pts
    if np.any(integral):
        psi.amp = psi.amp * np.exp(-0.5 * integral)
        psi.vol = psi.vol * np.exp(integral)


def simulate(psi: Wavefunction, flow: FlowField, dt: float, steps: int,
             observables: dict | None = None, record_every: int = 1,
             kernel: str = SPLINE, threads: int | None = None, check_cfl: bool = True,
             t0: float = 0.0):
    """Propagate and record expectation values every ``record_every`` steps.

    Returns ``(psi, record, report)``; ``psi`` is a new object.
    """
    if dt <= 0 or steps < 0:
        raise ValueError("need dt > 0 and steps >= 0")
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {KERNELS}")
    threads = thread_count(threads)
    psi = psi.copy()
    dt = float(dt)
    rep = PropagationReport(steps=steps, dt=dt)
    observables = observables or {}
    fns = {k: observable_function(v, flow.symbols, flow.subs) for k, v in observables.items()}
    record = TrajectoryRecord(list(fns))

    def observe(t):
        z = psi.coordinates()
        dens = psi.density()
        record.append(t, [float(np.sum(fn(z) * dens)) for fn in fns.values()], float(np.sum(dens)))

    stepper = None
    if psi.mode == GRID:
        rep.courant, dt_max = courant_number(psi, flow, dt)
        if check_cfl and rep.courant >= 1:
            raise CFLError(rep.courant, dt_max)
        stepper = _GridStepper(psi, flow, dt, kernel, threads)
    observe(t0)
    vol = psi.cell_volume() if psi.mode == GRID else None
    for k in range(1, steps + 1):
        if stepper is not None:
            leaving = stepper.exit_mask.reshape(psi.amp.shape)
            rep.leakage += float(np.sum((np.abs(psi.amp) ** 2 * psi.measure)[leaving]) * vol)
            psi.amp = stepper.step(psi.amp)
        else:
            _ensemble_step(flow, psi, dt, threads)
        if k % record_every == 0 or k == steps:
            observe(t0 + k * dt)
    if rep.leakage > LEAK_WARN:
        msg = f"{rep.leakage:.2%} of the norm left the grid"
        rep.warnings.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return psi, record, rep


def propagate(psi: Wavefunction, flow: FlowField, dt: float, steps: int, **kw):
    """Propagate without recording; returns ``(psi, report)``."""
    psi, _, rep = simulate(psi, flow, dt, steps, None, max(steps, 1), **kw)
    return psi, rep
