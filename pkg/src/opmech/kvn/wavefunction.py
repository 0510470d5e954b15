"""Phase-space amplitudes on a grid or carried by an ensemble of characteristics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

GRID = "grid"
ENSEMBLE = "ensemble"


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    n: int

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


class Wavefunction:
    """Complex amplitude with Born-rule semantics.

    Grid mode: ``amp`` has one axis per phase-space coordinate and
    ``measure`` is the per-cell Jacobian weight.  Ensemble mode: ``points``
    is ``(d, K)``; each point carries an amplitude and the phase-space
    volume it represents, so the norm is ``sum |amp|^2 vol``.
    """

    def __init__(self, mode, *, axes=None, amp=None, measure=None, points=None, vol=None,
                 names=None):
        self.mode = mode
        self.names = tuple(names) if names is not None else None
        if mode == GRID:
            self.axes = tuple(axes)
            self.amp = np.asarray(amp, dtype=complex)
            if self.amp.shape != tuple(a.n for a in self.axes):
                raise ValueError("amplitude shape does not match axes")
            self.measure = np.ones(self.amp.shape) if measure is None else np.asarray(measure, float)
        elif mode == ENSEMBLE:
            self.points = np.asarray(points, dtype=float)
            self.amp = np.asarray(amp, dtype=complex)
            self.vol = np.ones(self.amp.shape) if vol is None else np.asarray(vol, float)
        else:
            raise ValueError(f"unknown mode {mode!r}")

    @property
    def dim(self) -> int:
        return len(self.axes) if self.mode == GRID else self.points.shape[0]

    def copy(self) -> "Wavefunction":
        if self.mode == GRID:
            return Wavefunction(GRID, axes=self.axes, amp=self.amp.copy(), measure=self.measure,
                                names=self.names)
        return Wavefunction(ENSEMBLE, points=self.points.copy(), amp=self.amp.copy(),
                            vol=self.vol.copy(), names=self.names)

    # geometry
    def cell_volume(self) -> float:
        return float(np.prod([a.step for a in self.axes]))

    def mesh(self) -> np.ndarray:
        return np.stack(np.meshgrid(*(a.points for a in self.axes), indexing="ij"))

    def coordinates(self) -> np.ndarray:
        return self.mesh() if self.mode == GRID else self.points

    def density(self) -> np.ndarray:
        if self.mode == GRID:
            return np.abs(self.amp) ** 2 * self.measure * self.cell_volume()
        return np.abs(self.amp) ** 2 * self.vol

    def norm(self) -> float:
        return float(np.sum(self.density()))

    def normalize(self) -> "Wavefunction":
        self.amp = self.amp / np.sqrt(self.norm())
        return self

    # constructors
    @classmethod
    def gaussian_grid(cls, axes, center, width, measure=None, names=None) -> "Wavefunction":
        """``psi ~ exp(-sum (z - c)^2 / (4 w^2))`` so ``|psi|^2`` has std ``w``."""
        axes = [a if isinstance(a, Axis) else Axis(*a) for a in axes]
        mesh = np.stack(np.meshgrid(*(a.points for a in axes), indexing="ij"))
        w = np.broadcast_to(np.asarray(width, float), (len(axes),))
        e = sum((mesh[k] - center[k]) ** 2 / (4 * w[k] ** 2) for k in range(len(axes)))
        return cls(GRID, axes=axes, amp=np.exp(-e), measure=measure, names=names).normalize()

    @classmethod
    def gaussian_ensemble(cls, center, width, count: int, seed: int = 0, names=None
                          ) -> "Wavefunction":
        """Characteristics drawn from ``|psi|^2``, equal weights."""
        rng = np.random.default_rng(seed)
        c = np.asarray(center, float)
        w = np.broadcast_to(np.asarray(width, float), c.shape)
        pts = c[:, None] + w[:, None] * rng.standard_normal((c.size, count))
        return cls(ENSEMBLE, points=pts, amp=np.full(count, 1 / np.sqrt(count), dtype=complex),
                   names=names)

    @classmethod
    def point(cls, z, names=None) -> "Wavefunction":
        z = np.asarray(z, float).reshape(-1, 1)
        return cls(ENSEMBLE, points=z, amp=np.ones(1, dtype=complex), names=names)


def observable_function(obs, symbols, subs: dict | None = None):
    """Vectorized evaluator for a scalar expression in the phase-space symbols."""
    if callable(obs) and not isinstance(obs, sp.Basic):
        return obs
    e = sp.sympify(obs).xreplace(subs or {})
    extra = e.free_symbols - set(symbols)
    if extra:
        raise ValueError(f"observable depends on {sorted(map(str, extra))}")
    f = sp.lambdify(list(symbols), e, modules="numpy")
    return lambda z: np.broadcast_to(np.asarray(f(*z), dtype=float), z.shape[1:])


def expectation(psi: Wavefunction, obs, symbols=None, subs: dict | None = None) -> float:
    """``sum obs(z) |psi(z)|^2 dvol`` (grid) or ``sum obs(z_k) |a_k|^2 vol_k``."""
    fn = observable_function(obs, symbols or (), subs)
    z = psi.coordinates()
    return float(np.sum(fn(z) * psi.density()))
