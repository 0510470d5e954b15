"""Builtin example systems.

The pendulums use a z (resp. y) axis pointing *down*, so gravity is
``+m g`` along it, the hanging equilibrium sits at ``theta = 0`` and the
conical pendulum obeys ``cos(theta0) = g / (r omega^2)``.
"""
from __future__ import annotations

import sympy as sp

from ..scalar import ANGLE, COORDINATE, PARAMETER, RADIUS_DOMAIN, VELOCITY, SymbolTable
from .chart import CoordinateChart, identity_chart
from .system import ConstraintSpec, SystemSpec


def _cartesian(table: SymbolTable, names):
    X = tuple(table.add(n, COORDINATE, i) for i, n in enumerate(names))
    V = tuple(table.add(f"v_{n}", VELOCITY, i, partner=n) for i, n in enumerate(names))
    return X, V


def _generalized(table: SymbolTable, spec):
    q, v = [], []
    for i, (name, kind, domain) in enumerate(spec):
        q.append(table.add(name, kind, i, domain=domain))
        v.append(table.add(f"v_{name}", VELOCITY, i, partner=name))
    return tuple(q), tuple(v)


def free_particle() -> SystemSpec:
    t = SymbolTable()
    X, V = _cartesian(t, "xyz")
    m = t.add("m", PARAMETER)
    chart = identity_chart(t, X, V)
    return SystemSpec("free_particle", t, chart, (m,) * 3, forces=(0, 0, 0),
                      values={"m": 1.0})


def harmonic_oscillator() -> SystemSpec:
    t = SymbolTable()
    X, V = _cartesian(t, "x")
    m = t.add("m", PARAMETER)
    k = t.add("k", PARAMETER)
    chart = identity_chart(t, X, V)
    return SystemSpec("harmonic_oscillator", t, chart, (m,), potential=k * X[0] ** 2 / 2,
                      values={"m": 1.0, "k": 1.0})


def charged_particle() -> SystemSpec:
    """Particle in a confining scalar potential and a nonuniform magnetic field.

    ``A = (-b y/2, b x/2, c x y)`` is divergence free.
    """
    t = SymbolTable()
    X, V = _cartesian(t, "xyz")
    x, y, z = X
    m = t.add("m", PARAMETER)
    k = t.add("k", PARAMETER)
    b = t.add("b", PARAMETER)
    c = t.add("c", PARAMETER)
    chart = identity_chart(t, X, V)
    A = (-b * y / 2, b * x / 2, c * x * y)
    phi = k * (x**2 + y**2 + z**2) / 2
    return SystemSpec("charged_particle", t, chart, (m,) * 3, potential=phi,
                      vector_potential=A, values={"m": 1.0, "k": 1.0, "b": 1.0, "c": 0.5})


def planar_pendulum() -> SystemSpec:
    t = SymbolTable()
    X, V = _cartesian(t, "xy")
    x, y = X
    q, v = _generalized(t, [("theta", ANGLE, None), ("r", COORDINATE, RADIUS_DOMAIN)])
    th, r = q
    m = t.add("m", PARAMETER)
    g = t.add("g", PARAMETER)
    R = t.add("R", PARAMETER)
    rho = sp.sqrt(x**2 + y**2)
    chart = CoordinateChart(
        "polar", t, X, V, q, v,
        forward=(r * sp.sin(th), r * sp.cos(th)),
        inverse=((x / rho, y / rho), rho),
    )
    return SystemSpec("planar_pendulum", t, chart, (m, m),
                      constraints=ConstraintSpec((rho,), (R,)),
                      potential=-m * g * y,
                      values={"m": 1.0, "g": 9.81, "R": 1.0})


def spherical_pendulum() -> SystemSpec:
    t = SymbolTable()
    X, V = _cartesian(t, "xyz")
    x, y, z = X
    q, v = _generalized(t, [("theta", ANGLE, None), ("phi", ANGLE, None),
                            ("r", COORDINATE, RADIUS_DOMAIN)])
    th, ph, r = q
    m = t.add("m", PARAMETER)
    g = t.add("g", PARAMETER)
    R = t.add("R", PARAMETER)
    rho = sp.sqrt(x**2 + y**2)
    rr = sp.sqrt(x**2 + y**2 + z**2)
    chart = CoordinateChart(
        "spherical", t, X, V, q, v,
        forward=(r * sp.sin(th) * sp.cos(ph), r * sp.sin(th) * sp.sin(ph), r * sp.cos(th)),
        inverse=((rho / rr, z / rr), (y / rho, x / rho), rr),
    )
    return SystemSpec("spherical_pendulum", t, chart, (m,) * 3,
                      constraints=ConstraintSpec((rr,), (R,)),
                      potential=-m * g * z,
                      values={"m": 1.0, "g": 9.81, "R": 1.0})


BUILTINS = {
    "free_particle": free_particle,
    "harmonic_oscillator": harmonic_oscillator,
    "charged_particle": charged_particle,
    "planar_pendulum": planar_pendulum,
    "spherical_pendulum": spherical_pendulum,
}


def builtin(name: str) -> SystemSpec:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin system {name!r}; choose from {sorted(BUILTINS)}") from None
