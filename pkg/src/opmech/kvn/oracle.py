"""Reference trajectories: Cartesian Gauss dynamics and plain RK4 on a flow."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mechanics.numeric import CompiledSystem
from ..mechanics.system import SystemSpec
from .flow import FlowField

PROJECT_TOL = 1e-10
DRIFT_TOL = 1e-8
MAX_HALVINGS = 8


@dataclass
class OracleTrajectory:
    t: np.ndarray
    X: np.ndarray        # (steps+1, N)
    V: np.ndarray
    multipliers: np.ndarray  # (steps+1, l)
    halvings: int = 0

    @property
    def tension(self) -> np.ndarray:
        return -self.multipliers


class CartesianOracle:
    """RK4 on ``M a = F + G^T mu`` with projection back onto the constraint set."""

    def __init__(self, sys: SystemSpec, values: dict | None = None,
                 compiled: CompiledSystem | None = None):
        self.cs = compiled or CompiledSystem(sys, values)
        self.minv = 1 / self.cs.masses
        self.halvings = 0

    def accel(self, X, V):
        return self.cs.gauss(X, V).accel

    def drift(self, X) -> float:
        if self.cs.l == 0:
            return 0.0
        return float(np.max(np.abs(self.cs.constraint(X) - self.cs.constants)))

    def project(self, X, V):
        cs = self.cs
        if cs.l == 0:
            return X, V
        for _ in range(50):
            r = cs.constraint(X) - cs.constants
            if np.max(np.abs(r)) < PROJECT_TOL:
                break
            G = cs.grad(X)
            W = G * self.minv
            X = X - W.T @ np.linalg.solve(W @ G.T, r)
        G = cs.grad(X)
        W = G * self.minv
        V = V - W.T @ np.linalg.solve(W @ G.T, G @ V)
        return X, V

    def _rk4(self, X, V, h):
        a1 = self.accel(X, V)
        k1x, k1v = V, a1
        k2x, k2v = V + h / 2 * k1v, self.accel(X + h / 2 * k1x, V + h / 2 * k1v)
        k3x, k3v = V + h / 2 * k2v, self.accel(X + h / 2 * k2x, V + h / 2 * k2v)
        k4x, k4v = V + h * k3v, self.accel(X + h * k3x, V + h * k3v)
        return (X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
                V + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v))

    def step(self, X, V, h, depth=0):
        Xn, Vn = self._rk4(X, V, h)
        if self.drift(Xn) > DRIFT_TOL and depth < MAX_HALVINGS:
            self.halvings += 1
            Xm, Vm = self.step(X, V, h / 2, depth + 1)
            return self.step(Xm, Vm, h / 2, depth + 1)
        return self.project(Xn, Vn)

    def run(self, X0, V0, dt: float, steps: int, record_every: int = 1) -> OracleTrajectory:
        X, V = self.project(np.asarray(X0, float), np.asarray(V0, float))
        ts, Xs, Vs, mus = [], [], [], []

        def rec(t):
            ts.append(t)
            Xs.append(X.copy())
            Vs.append(V.copy())
            mus.append(self.cs.gauss(X, V).multipliers)

        rec(0.0)
        for k in range(1, steps + 1):
            X, V = self.step(X, V, dt)
            if k % record_every == 0 or k == steps:
                rec(k * dt)
        return OracleTrajectory(np.array(ts), np.array(Xs), np.array(Vs), np.array(mus),
                                self.halvings)


def classical_oracle(sys: SystemSpec, q0, v0, dt: float, steps: int,
                     values: dict | None = None, record_every: int = 1) -> OracleTrajectory:
    """Start from reduced coordinates, integrate in Cartesian space."""
    orc = CartesianOracle(sys, values)
    X0, V0 = orc.cs.to_cartesian(q0, v0)
    return orc.run(X0, V0, dt, steps, record_every)


def integrate_flow(flow: FlowField, z0, dt: float, steps: int, record_every: int = 1):
    """Classical RK4 on a compiled flow; returns ``(t, states)``."""
    z = np.asarray(z0, float)
    ts, zs = [0.0], [z.copy()]
    f = flow.point
    for k in range(1, steps + 1):
        k1 = np.array(f(z))
        k2 = np.array(f(z + dt / 2 * k1))
        k3 = np.array(f(z + dt / 2 * k2))
        k4 = np.array(f(z + dt * k3))
        z = z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % record_every == 0 or k == steps:
            ts.append(k * dt)
            zs.append(z.copy())
    return np.array(ts), np.array(zs)
