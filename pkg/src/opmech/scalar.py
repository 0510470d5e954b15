"""Commutative symbolic layer.

Scalar expressions are plain :mod:`sympy` expressions whose symbols come
from a :class:`SymbolTable`.  This module adds what sympy does not give us
directly: a canonical form with exactly one trigonometric rewrite
(``sin^2 + cos^2 -> 1``), a small text grammar with a parser and printer,
angle-symbol hygiene, and a seeded sampling oracle for identities that the
canonical form cannot close.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import sympy as sp
from sympy.printing.str import StrPrinter

__all__ = [
    "ANGLE",
    "COORDINATE",
    "MOMENTUM",
    "PARAMETER",
    "VELOCITY",
    "ParseError",
    "SamplingError",
    "SymbolInfo",
    "SymbolTable",
    "canon",
    "check_angles",
    "differentiate",
    "evaluate",
    "is_zero",
    "numeric_equal",
    "parse_expr",
    "to_latex",
    "to_text",
]

COORDINATE = "coordinate"
ANGLE = "angle"
VELOCITY = "velocity"
MOMENTUM = "momentum"
PARAMETER = "parameter"
KINDS = (COORDINATE, ANGLE, VELOCITY, MOMENTUM, PARAMETER)

ANGLE_DOMAIN = (0.1, math.pi - 0.1)
RADIUS_DOMAIN = (0.5, 2.0)
DEFAULT_DOMAIN = (-2.0, 2.0)

POLE_EPS = 1e-12


class ParseError(ValueError):
    """Raised for malformed expression text.

    ``pos`` is the 0-based character offset into the parsed string.
    """

    def __init__(self, msg: str, pos: int, text: str = ""):
        self.msg = msg
        self.pos = pos
        self.text = text
        super().__init__(f"{msg} at position {pos}")


class SamplingError(RuntimeError):
    """Too many samples landed on poles or outside the real domain."""


@dataclass(frozen=True)
class SymbolInfo:
    name: str
    kind: str
    index: int | None = None
    partner: str | None = None
    domain: tuple[float, float] | None = None

    def sampling_domain(self) -> tuple[float, float]:
        if self.domain is not None:
            return self.domain
        if self.kind == ANGLE:
            return ANGLE_DOMAIN
        if self.kind == PARAMETER:
            return RADIUS_DOMAIN
        return DEFAULT_DOMAIN


def make_symbol(name: str, kind: str) -> sp.Symbol:
    if kind == PARAMETER:
        return sp.Symbol(name, positive=True)
    return sp.Symbol(name, real=True)


class SymbolTable:
    """Ordered collection of named symbols with their kinds."""

    def __init__(self, entries: Iterable[SymbolInfo] = ()):
        self._info: dict[str, SymbolInfo] = {}
        self._sym: dict[str, sp.Symbol] = {}
        for e in entries:
            self._insert(e)

    def _insert(self, info: SymbolInfo) -> sp.Symbol:
        if info.kind not in KINDS:
            raise ValueError(f"unknown symbol kind {info.kind!r}")
        if info.name in self._info:
            old = self._info[info.name]
            if old.kind != info.kind:
                raise ValueError(f"symbol {info.name!r} already declared as {old.kind}")
            return self._sym[info.name]
        if info.kind in (VELOCITY, MOMENTUM):
            if info.partner is None:
                raise ValueError(f"{info.kind} {info.name!r} needs a partner coordinate")
            taken = [
                e.name for e in self._info.values()
                if e.kind == info.kind and e.partner == info.partner
            ]
            if taken:
                raise ValueError(
                    f"coordinate {info.partner!r} already has {info.kind} {taken[0]!r}")
        self._info[info.name] = info
        self._sym[info.name] = make_symbol(info.name, info.kind)
        return self._sym[info.name]

    def add(self, name: str, kind: str, index: int | None = None,
            partner: str | None = None,
            domain: tuple[float, float] | None = None) -> sp.Symbol:
        return self._insert(SymbolInfo(name, kind, index, partner, domain))

    def __contains__(self, name) -> bool:
        if isinstance(name, sp.Symbol):
            name = name.name
        return name in self._info

    def __getitem__(self, name: str) -> sp.Symbol:
        return self._sym[name]

    def __iter__(self):
        return iter(self._info.values())

    def __len__(self) -> int:
        return len(self._info)

    def info(self, s) -> SymbolInfo:
        name = s.name if isinstance(s, sp.Symbol) else s
        return self._info[name]

    def get(self, name: str):
        return self._sym.get(name)

    def symbols(self, kind: str | None = None) -> list[sp.Symbol]:
        return [self._sym[n] for n, e in self._info.items() if kind is None or e.kind == kind]

    def angles(self) -> set[sp.Symbol]:
        return set(self.symbols(ANGLE))

    def merged(self, other: "SymbolTable") -> "SymbolTable":
        out = SymbolTable(self)
        for e in other:
            out._insert(e)
        return out

    def domain(self, s) -> tuple[float, float]:
        return self.info(s).sampling_domain()


# ---------------------------------------------------------------------------
# canonical form


def _pythagorean_pass(e: sp.Expr) -> sp.Expr | None:
    """Merge one pair ``c*R*sin(a)^2 + c*R*cos(a)^2`` into ``c*R``."""
    terms = sp.Add.make_args(e)
    if len(terms) < 2:
        return None
    index = {t: i for i, t in enumerate(terms)}
    for t in terms:
        for f in t.atoms(sp.sin):
            powers = t.as_powers_dict()
            if powers.get(f, 0) < 2:
                continue
            partner = sp.expand(t / f**2 * sp.cos(f.args[0]) ** 2)
            if partner in index:
                rest = sp.expand(t / f**2)
                kept = [u for u in terms if u is not t and u != partner]
                return sp.Add(*kept, rest)
    return None


def canon(e) -> sp.Expr:
    """Expanded sum of products with folded rationals.

    The only trigonometric simplification is ``sin^2 + cos^2 -> 1`` between
    otherwise identical terms; tan/cot/sec/csc (which sympy's simplifier
    likes to introduce) are written back in terms of sin and cos.  ``canon(canon(e)) == canon(e)``.
    """
    e = sp.sympify(e)
    if e.has(sp.tan, sp.cot, sp.sec, sp.csc):
        e = e.replace(sp.tan, lambda a: sp.sin(a) / sp.cos(a)).replace(
            sp.cot, lambda a: sp.cos(a) / sp.sin(a)).replace(
            sp.sec, lambda a: 1 / sp.cos(a)).replace(sp.csc, lambda a: 1 / sp.sin(a))
    e = sp.expand(e)
    while True:
        nxt = _pythagorean_pass(e)
        if nxt is None:
            return e
        e = sp.expand(nxt)


def differentiate(e, s: sp.Symbol) -> sp.Expr:
    """Canonical partial derivative.

    Angle symbols are valid differentiation variables even though they only
    ever appear inside ``sin``/``cos``.
    """
    return canon(sp.diff(sp.sympify(e), s))


def check_angles(e, angles: Iterable[sp.Symbol]) -> None:
    """Raise ``ValueError`` if an angle symbol occurs outside sin/cos."""
    angles = set(angles)
    if not angles:
        return

    def walk(node, inside):
        if node.is_Symbol:
            if node in angles and not inside:
                raise ValueError(f"bare angle symbol {node} outside sin/cos")
            return
        if isinstance(node, (sp.sin, sp.cos)):
            inside = True
        elif isinstance(node, sp.Function):
            inside = False
        for a in node.args:
            walk(a, inside)

    walk(sp.sympify(e), False)


# ---------------------------------------------------------------------------
# numeric sampling


def _poles(e: sp.Expr) -> list[sp.Expr]:
    out = []
    for p in e.atoms(sp.Pow):
        if p.exp.is_negative:
            out.append(p.base)
    return out


def _lambdify(syms, e):
    f = sp.lambdify(syms, e, modules="numpy")
    return f


def _sample(syms, table: SymbolTable | None, n: int, rng: np.random.Generator) -> np.ndarray:
    cols = []
    for s in syms:
        if table is not None and s in table:
            lo, hi = table.domain(s)
        elif s.is_positive:
            lo, hi = RADIUS_DOMAIN
        else:
            lo, hi = DEFAULT_DOMAIN
        cols.append(rng.uniform(lo, hi, size=n))
    return np.array(cols).reshape(len(syms), n)


def evaluate(exprs: Mapping[str, sp.Expr] | list, table: SymbolTable | None = None,
             trials: int = 100, seed: int = 0):
    """Evaluate expressions at ``trials`` pole-free random points.

    Returns ``(points, values)`` where ``points`` maps each free symbol to a
    sample vector and ``values`` is a list of complex arrays in input order.
    """
    exprs = [sp.sympify(e) for e in (exprs.values() if isinstance(exprs, Mapping) else exprs)]
    syms = sorted(set().union(*(e.free_symbols for e in exprs)) if exprs else set(),
                  key=lambda s: s.name)
    rng = np.random.default_rng(seed)
    fns = [_lambdify(syms, e) for e in exprs]
    pole_bases = [b for e in exprs for b in _poles(e)]
    pole_fns = [_lambdify(syms, b) for b in pole_bases]

    good_pts = np.empty((len(syms), 0))
    good_vals = [np.empty(0, dtype=complex) for _ in exprs]
    attempts = 0
    while good_pts.shape[1] < trials:
        if attempts >= 10 * trials:
            raise SamplingError(
                f"could not find {trials} pole-free samples in {attempts} draws")
        need = trials - good_pts.shape[1]
        pts = _sample(syms, table, need, rng)
        attempts += need
        ok = np.ones(need, dtype=bool)
        with np.errstate(all="ignore"):
            for pf in pole_fns:
                v = np.broadcast_to(np.asarray(pf(*pts), dtype=complex), (need,))
                ok &= np.abs(v) >= POLE_EPS
            vals = []
            for f in fns:
                v = np.broadcast_to(np.asarray(f(*pts), dtype=complex), (need,))
                ok &= np.isfinite(v)
                vals.append(v)
        good_pts = np.concatenate([good_pts, pts[:, ok]], axis=1)
        good_vals = [np.concatenate([g, v[ok]]) for g, v in zip(good_vals, vals)]
    points = {s: good_pts[i] for i, s in enumerate(syms)}
    return points, good_vals


def numeric_equal(a, b, trials: int = 100, tol: float = 1e-9, seed: int = 0,
                  table: SymbolTable | None = None) -> bool:
    """Sampling oracle: ``|a - b| <= tol * (1 + |a|)`` at every sample."""
    if trials < 1 or tol <= 0:
        raise ValueError("need trials >= 1 and tol > 0")
    _, (va, vb) = evaluate([a, b], table, trials, seed)
    return bool(np.all(np.abs(va - vb) <= tol * (1.0 + np.abs(va))))


def is_zero(e, trials: int = 100, tol: float = 1e-9, seed: int = 0,
            table: SymbolTable | None = None) -> bool:
    """Canonical-form test first, then the sampling fallback."""
    c = canon(e)
    if c == 0:
        return True
    if not c.free_symbols:
        return abs(complex(c)) <= tol
    return numeric_equal(c, sp.Integer(0), trials=trials, tol=tol, seed=seed, table=table)


# ---------------------------------------------------------------------------
# text grammar

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
                    r"|(?P<op>[-+*/^()]))")
_FUNCS = {"sin": sp.sin, "cos": sp.cos, "sqrt": sp.sqrt}


class _Parser:
    def __init__(self, text: str, table: SymbolTable):
        self.text = text
        self.table = table
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ParseError(f"unexpected character {text[bad]!r}", bad, text)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.i = 0
        self.trig_depth = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "", len(self.text))

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, val):
        t = self.take()
        if t[1] != val:
            what = "end of input" if t[0] == "eof" else repr(t[1])
            raise ParseError(f"expected {val!r}, found {what}", t[2], self.text)
        return t

    def parse(self):
        e = self.expr()
        t = self.peek()
        if t[0] != "eof":
            raise ParseError(f"unexpected {t[1]!r}", t[2], self.text)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self):
        if self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            e = self.unary()
            return -e if op == "-" else e
        return self.factor()

    def factor(self):
        b = self.base()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            t = self.take()
            if t[0] != "num" or not t[1].isdigit():
                raise ParseError("exponent must be an integer", t[2], self.text)
            b = b ** (sign * int(t[1]))
        return b

    def base(self):
        kind, val, pos = self.take()
        if kind == "num":
            return sp.Rational(val)
        if kind == "id":
            if val in _FUNCS:
                self.expect("(")
                trig = val in ("sin", "cos")
                saved = self.trig_depth
                self.trig_depth = 1 if trig else 0
                arg = self.expr()
                self.trig_depth = saved
                self.expect(")")
                return _FUNCS[val](arg)
            if val not in self.table:
                raise ParseError(f"unknown identifier {val!r}", pos, self.text)
            if self.table.info(val).kind == ANGLE and not self.trig_depth:
                raise ParseError(f"bare angle {val!r} outside sin/cos", pos, self.text)
            return self.table[val]
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "eof" else repr(val)
        raise ParseError(f"unexpected {what}", pos, self.text)


def parse_expr(text: str, table: SymbolTable) -> sp.Expr:
    """Parse the expression grammar into a canonical sympy expression.

    ``expr := term (('+'|'-') term)*``, ``term := factor (('*'|'/') factor)*``,
    ``factor := base ('^' int)?``, ``base := number | ident | func '(' expr ')'
    | '(' expr ')'`` with ``func`` one of sin, cos, sqrt.  A leading sign is
    accepted on any factor.  The result is expanded with rationals folded but
    keeps ``sin^2 + cos^2`` as written; :func:`canon` applies that rewrite.
    """
    return sp.expand(_Parser(text, table).parse())


class _GrammarPrinter(StrPrinter):
    def _print_Pow(self, expr, rational=False):
        b, e = expr.as_base_exp()
        if e == sp.Rational(1, 2):
            return f"sqrt({self._print(b)})"
        if e == -sp.Rational(1, 2):
            return f"1/sqrt({self._print(b)})"
        if e.is_Rational and e.q == 2:
            return f"sqrt({self._print(b)})^{e.p}"
        if e == -1:
            return f"1/{self.parenthesize(b, sp.printing.precedence.PRECEDENCE['Pow'])}"
        bs = self.parenthesize(b, sp.printing.precedence.PRECEDENCE["Pow"], strict=True)
        if e.is_Integer and e < 0:
            return f"1/{bs}^{-e}"
        return f"{bs}^{self._print(e)}"

    def _print_ImaginaryUnit(self, expr):
        return "I"


def to_text(e) -> str:
    """Render in the parser's grammar (``^`` for powers)."""
    return _GrammarPrinter({"order": None}).doprint(sp.sympify(e))


def to_latex(e) -> str:
    return sp.latex(sp.sympify(e))
