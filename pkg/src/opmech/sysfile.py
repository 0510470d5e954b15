"""INI-style system definitions.

A small hand-written reader is used instead of configparser so that every
error can point at a line and column of the original file.  Example::

    [system]
    name = pendulum
    cartesian = x, y
    masses = m, m
    parameters = m = 1, g = 9.81, R = 1

    [coordinates]
    generalized = theta:angle, r:radius
    x = r*sin(theta)
    y = r*cos(theta)

    [constraints]
    sqrt(x^2 + y^2) = R

    [potential]
    phi = -m*g*y

    [simulation]
    mode = grid
    center = theta = 0.05, v_theta = 0
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import sympy as sp

from .mechanics.chart import CoordinateChart, SingularChartError, identity_chart
from .mechanics.system import ConstraintSpec, SystemSpec
from .scalar import (ANGLE, COORDINATE, PARAMETER, RADIUS_DOMAIN, VELOCITY, ParseError,
                     SymbolTable, parse_expr)

SECTIONS = ("system", "coordinates", "constraints", "potential", "forces", "simulation")
KINDS = {"angle": (ANGLE, None), "coordinate": (COORDINATE, None), "radius": (COORDINATE, RADIUS_DOMAIN)}
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class SysFileError(ValueError):
    def __init__(self, msg: str, line: int, col: int, path: str = "<input>"):
        self.msg, self.line, self.col, self.path = msg, line, col, path
        super().__init__(f"{path}:{line}:{col}: {msg}")


@dataclass
class Entry:
    key: str
    value: str
    line: int
    key_col: int
    value_col: int


@dataclass
class SimConfig:
    mode: str = "grid"
    dt: float | None = None
    t_final: float = 1.0
    center: dict[str, float] = field(default_factory=dict)
    width: dict[str, float] | float = 0.1
    grid: int = 128
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    points: int = 10000
    observables: list[str] = field(default_factory=list)
    record_every: int = 1
    seed: int = 0
    kernel: str = "cubic-spline"


def read_sections(text: str, path: str = "<input>") -> dict[str, list[Entry]]:
    out: dict[str, list[Entry]] = {}
    cur = None
    for ln, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].split(";", 1)[0].rstrip()
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        s = body.strip()
        if s.startswith("["):
            if not s.endswith("]"):
                raise SysFileError("unterminated section header", ln, indent + len(s) + 1, path)
            cur = s[1:-1].strip().lower()
            if cur not in SECTIONS:
                raise SysFileError(f"unknown section [{cur}]", ln, indent + 2, path)
            if cur in out:
                raise SysFileError(f"duplicate section [{cur}]", ln, indent + 1, path)
            out[cur] = []
            continue
        if cur is None:
            raise SysFileError("entry before any section header", ln, indent + 1, path)
        eq = body.find("=")
        if eq < 0:
            raise SysFileError("expected 'key = value'", ln, len(body) + 1, path)
        key = body[:eq].strip()
        if not key:
            raise SysFileError("missing key", ln, eq + 1, path)
        rest = body[eq + 1:]
        vcol = eq + 2 + (len(rest) - len(rest.lstrip()))
        out[cur].append(Entry(key, rest.strip(), ln, indent + 1, vcol))
    return out


def split_items(e: Entry, sep: str = ","):
    """Split a value on ``sep``, keeping the column of every piece."""
    items, start = [], 0
    v = e.value
    for part in v.split(sep):
        lead = len(part) - len(part.lstrip())
        items.append((part.strip(), e.value_col + start + lead))
        start += len(part) + len(sep)
    return items


class _Builder:
    def __init__(self, sections, path):
        self.s = sections
        self.path = path
        self.table = SymbolTable()

    def err(self, msg, line, col):
        return SysFileError(msg, line, col, self.path)

    def get(self, section, key, required=True):
        for e in self.s.get(section, []):
            if e.key == key:
                return e
        if required:
            raise self.err(f"[{section}] needs '{key}'", 1, 1)
        return None

    def expr(self, text, line, col):
        try:
            return parse_expr(text, self.table)
        except ParseError as exc:
            raise self.err(exc.msg, line, col + exc.pos) from None

    def name(self, text, line, col):
        if not _NAME.match(text):
            raise self.err(f"invalid name {text!r}", line, col)
        return text

    def number(self, text, line, col):
        try:
            return float(text)
        except ValueError:
            raise self.err(f"expected a number, found {text!r}", line, col) from None

    def assignments(self, e: Entry):
        out = {}
        for item, col in split_items(e):
            if "=" not in item:
                raise self.err("expected 'name = value'", e.line, col)
            k, v = item.split("=", 1)
            out[self.name(k.strip(), e.line, col)] = (v.strip(), col + item.index("=") + 1
                                                     + len(v) - len(v.lstrip()))
        return out

    def build(self) -> tuple[SystemSpec, SimConfig | None]:
        t = self.table
        name = self.get("system", "name", False)
        cart_e = self.get("system", "cartesian")
        cart_names = [self.name(n, cart_e.line, c) for n, c in split_items(cart_e)]
        params = {}
        pe = self.get("system", "parameters", False)
        if pe is not None:
            for k, (v, col) in self.assignments(pe).items():
                t.add(k, PARAMETER)
                params[k] = self.number(v, pe.line, col)
        X = tuple(t.add(n, COORDINATE, i) for i, n in enumerate(cart_names))
        V = tuple(t.add(f"v_{n}", VELOCITY, i, partner=n) for i, n in enumerate(cart_names))
        chart = self.chart(X, V)
        me = self.get("system", "masses")
        masses = tuple(self.expr(m, me.line, c) for m, c in split_items(me))
        if len(masses) == 1:
            masses = masses * len(X)
        if len(masses) != len(X):
            raise self.err("one mass per Cartesian coordinate", me.line, me.value_col)
        cons = self.constraints()
        phi = A = forces = None
        if "potential" in self.s:
            pe = self.get("potential", "phi", False)
            if pe is not None:
                phi = self.expr(pe.value, pe.line, pe.value_col)
            ae = self.get("potential", "A", False)
            if ae is not None:
                A = tuple(self.expr(a, ae.line, c) for a, c in split_items(ae))
                if len(A) != len(X):
                    raise self.err("one vector-potential component per Cartesian coordinate",
                                   ae.line, ae.value_col)
        if "forces" in self.s:
            given = {}
            for e in self.s["forces"]:
                if e.key not in cart_names:
                    raise self.err(f"force on unknown coordinate {e.key!r}", e.line, e.key_col)
                given[e.key] = self.expr(e.value, e.line, e.value_col)
            forces = tuple(given.get(n, sp.Integer(0)) for n in cart_names)
        try:
            sys = SystemSpec(name.value if name else "system", t, chart, masses, cons, forces,
                             phi, A, params)
        except ValueError as exc:
            raise self.err(str(exc), 1, 1) from None
        if cons.count and not sys.check_constraint_coordinates():
            raise self.err("the last generalized coordinates must equal the constraint functions",
                           self.s["constraints"][0].line, 1)
        return sys, self.simulation()

    def chart(self, X, V):
        if "coordinates" not in self.s:
            return identity_chart(self.table, X, V)
        ge = self.get("coordinates", "generalized")
        spec = []
        for item, col in split_items(ge):
            nm, _, kind = item.partition(":")
            kind = kind.strip() or "coordinate"
            if kind not in KINDS:
                raise self.err(f"unknown coordinate kind {kind!r}", ge.line, col)
            spec.append((self.name(nm.strip(), ge.line, col), *KINDS[kind]))
        if len(spec) != len(X):
            raise self.err("need as many generalized as Cartesian coordinates", ge.line, ge.value_col)
        q = tuple(self.table.add(n, k, i, domain=d) for i, (n, k, d) in enumerate(spec))
        v = tuple(self.table.add(f"v_{n}", VELOCITY, i, partner=n) for i, (n, _, _) in enumerate(spec))
        fwd = []
        for x in X:
            e = self.get("coordinates", x.name)
            fwd.append(self.expr(e.value, e.line, e.value_col))
        inverse = []
        for qj, (n, k, _) in zip(q, spec):
            e = self.get("coordinates", f"inverse.{n}", False)
            if e is None:
                inverse = ()
                break
            parts = [self.expr(p, e.line, c) for p, c in split_items(e)]
            if len(parts) != (2 if k == ANGLE else 1):
                raise self.err("angles take 'sin, cos' inverse pairs", e.line, e.value_col)
            inverse.append(tuple(parts) if k == ANGLE else parts[0])
        name = self.get("coordinates", "chart", False)
        try:
            return CoordinateChart(name.value if name else "chart", self.table, X, V, q, v,
                                   tuple(fwd), tuple(inverse))
        except SingularChartError:
            # a derivation failure, not malformed input
            raise
        except ValueError as exc:
            raise self.err(str(exc), ge.line, 1) from None

    def constraints(self) -> ConstraintSpec:
        f, C = [], []
        for e in self.s.get("constraints", []):
            f.append(self.expr(e.key, e.line, e.key_col))
            C.append(self.expr(e.value, e.line, e.value_col))
        return ConstraintSpec(tuple(f), tuple(C))

    def simulation(self) -> SimConfig | None:
        if "simulation" not in self.s:
            return None
        cfg = SimConfig()
        for e in self.s["simulation"]:
            k = e.key
            if k in ("dt", "t_final"):
                setattr(cfg, k, self.number(e.value, e.line, e.value_col))
            elif k in ("grid", "points", "record_every", "seed"):
                setattr(cfg, k, int(self.number(e.value, e.line, e.value_col)))
            elif k in ("mode", "kernel"):
                setattr(cfg, k, e.value)
            elif k == "center":
                cfg.center = {n: self.number(v, e.line, c) for n, (v, c) in self.assignments(e).items()}
            elif k == "width":
                if "=" in e.value:
                    cfg.width = {n: self.number(v, e.line, c) for n, (v, c) in self.assignments(e).items()}
                else:
                    cfg.width = self.number(e.value, e.line, e.value_col)
            elif k == "bounds":
                b = {}
                for n, (v, c) in self.assignments(e).items():
                    lo, sep, hi = v.partition(":")
                    if not sep:
                        raise self.err("bounds are 'name = lo:hi'", e.line, c)
                    b[n] = (self.number(lo, e.line, c), self.number(hi, e.line, c))
                cfg.bounds = b
            elif k == "observables":
                cfg.observables = [o for o, _ in split_items(e)]
            else:
                raise self.err(f"unknown simulation setting {k!r}", e.line, e.key_col)
        return cfg


def parse_system(text: str, path: str = "<input>") -> tuple[SystemSpec, SimConfig | None]:
    return _Builder(read_sections(text, path), path).build()


def load_system(path) -> tuple[SystemSpec, SimConfig | None]:
    with open(path) as fh:
        return parse_system(fh.read(), str(path))
