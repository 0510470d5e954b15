"""Noncommutative operator algebra on the classical Hilbert space.

Every operator is kept in normal order: a sum of terms ``f(z) * G^alpha``
with the coefficient to the left of a monomial in mutually commuting
conjugate generators.  A generator ``G`` acts on coefficients as
``-i`` times a derivation ``D_G`` (for plain coordinate frames
``D_G = d/dq``), so the commutation rule ``[f, G] = i D_G f`` is the only
rewrite needed to restore normal order after a product:

    G^alpha g = sum_{gamma <= alpha} C(alpha, gamma) (-i)^|gamma| (D^gamma g) G^(alpha - gamma)

Generators of one frame commute, which the multi-index representation
relies on.  The imaginary unit is carried exactly as ``sympy.I``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping, Sequence

import sympy as sp

from .scalar import SymbolTable, canon, is_zero, to_latex, to_text

__all__ = [
    "FrameMismatchError",
    "Generator",
    "GeneratorFrame",
    "OperatorDegreeError",
    "OperatorExpr",
    "adjoint",
    "commutator",
    "hermitize",
    "is_hermitian",
    "multiply",
    "symmetrized",
]

I = sp.I
MAX_DEGREE = 4


class FrameMismatchError(ValueError):
    pass


class OperatorDegreeError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    """Conjugate generator ``-i D`` with ``D f = sum_s c_s df/ds``."""

    name: str
    kind: str  # "lambda" or "pi"
    partner: str
    derivation: tuple[tuple[sp.Symbol, sp.Expr], ...]
    latex: str = ""

    def apply(self, f: sp.Expr) -> sp.Expr:
        if not f.free_symbols:
            return sp.Integer(0)
        acc = sp.Integer(0)
        for s, c in self.derivation:
            if s in f.free_symbols:
                acc += c * sp.diff(f, s)
        return canon(acc)


class GeneratorFrame:
    """A commuting set of coefficient symbols and their conjugate generators.

    ``kind`` is ``"velocity"`` for ``[X, lambda] = [V, pi] = i`` frames and
    ``"momentum"`` for ``[q, lambda'] = [p, pi'] = i`` frames.
    """

    def __init__(self, name: str, table: SymbolTable, generators: Sequence[Generator],
                 kind: str = "velocity"):
        self.name = name
        self.table = table
        self.kind = kind
        self.generators = tuple(generators)
        self._index = {g.name: i for i, g in enumerate(self.generators)}
        if len(self._index) != len(self.generators):
            raise ValueError("duplicate generator names")
        partners = [g.partner for g in self.generators]
        if len(set(partners)) != len(partners):
            raise ValueError("each symbol needs exactly one conjugate generator")

    @classmethod
    def coordinate(cls, name: str, table: SymbolTable,
                   pairs: Iterable[tuple[sp.Symbol, str, str, str]],
                   kind: str = "velocity") -> "GeneratorFrame":
        """Frame whose generators are plain partial derivatives.

        ``pairs`` holds ``(symbol, generator_name, generator_kind, latex)``.
        """
        gens = [Generator(gname, gkind, s.name, ((s, sp.Integer(1)),), latex)
                for s, gname, gkind, latex in pairs]
        return cls(name, table, gens, kind)

    @property
    def n(self) -> int:
        return len(self.generators)

    def index(self, name: str) -> int:
        return self._index[name]

    def generator(self, name: str) -> Generator:
        return self.generators[self._index[name]]

    def unit(self, name: str) -> tuple[int, ...]:
        m = [0] * self.n
        m[self._index[name]] = 1
        return tuple(m)

    def zero_mono(self) -> tuple[int, ...]:
        return (0,) * self.n

    def __repr__(self) -> str:
        return f"GeneratorFrame({self.name!r}, {[g.name for g in self.generators]})"


class OperatorExpr:
    """Normal-ordered operator: mapping from multi-index to coefficient."""

    __slots__ = ("frame", "terms")

    def __init__(self, frame: GeneratorFrame, terms: Mapping[tuple[int, ...], sp.Expr] | None = None,
                 *, canonical: bool = False):
        self.frame = frame
        out = {}
        for mono, c in (terms or {}).items():
            if len(mono) != frame.n:
                raise ValueError("monomial length does not match frame")
            if sum(mono) > MAX_DEGREE:
                raise OperatorDegreeError(
                    f"conjugate degree {sum(mono)} exceeds cap {MAX_DEGREE}")
            c = sp.sympify(c) if canonical else canon(c)
            if c != 0:
                out[tuple(mono)] = c
        self.terms = dict(sorted(out.items(), key=lambda kv: (sum(kv[0]), tuple(-k for k in kv[0]))))

    # construction helpers
    @classmethod
    def scalar(cls, frame: GeneratorFrame, c) -> "OperatorExpr":
        return cls(frame, {frame.zero_mono(): sp.sympify(c)})

    @classmethod
    def gen(cls, frame: GeneratorFrame, name: str, coeff=1) -> "OperatorExpr":
        return cls(frame, {frame.unit(name): sp.sympify(coeff)})

    @classmethod
    def zero(cls, frame: GeneratorFrame) -> "OperatorExpr":
        return cls(frame, {})

    # queries
    def coeff(self, which=None) -> sp.Expr:
        """Coefficient of a monomial, a generator name, or the scalar part."""
        if which is None:
            mono = self.frame.zero_mono()
        elif isinstance(which, str):
            mono = self.frame.unit(which)
        else:
            mono = tuple(which)
        return self.terms.get(mono, sp.Integer(0))

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def is_conjugate_free(self) -> bool:
        return all(sum(m) == 0 for m in self.terms)

    def conjugate_part(self) -> "OperatorExpr":
        return OperatorExpr(self.frame, {m: c for m, c in self.terms.items() if sum(m)},
                            canonical=True)

    def map_coefficients(self, fn) -> "OperatorExpr":
        return OperatorExpr(self.frame, {m: fn(c) for m, c in self.terms.items()})

    def is_zero(self, numeric: bool = True, tol: float = 1e-9, trials: int = 100,
                seed: int = 0) -> bool:
        if not self.terms:
            return True
        if not numeric:
            return False
        return all(is_zero(c, trials=trials, tol=tol, seed=seed, table=self.frame.table)
                   for c in self.terms.values())

    def equals(self, other: "OperatorExpr", **kw) -> bool:
        return (self - other).is_zero(**kw)

    # arithmetic
    def _check(self, other: "OperatorExpr"):
        if other.frame is not self.frame:
            raise FrameMismatchError(f"{self.frame.name} vs {other.frame.name}")

    def __add__(self, other):
        if not isinstance(other, OperatorExpr):
            other = OperatorExpr.scalar(self.frame, other)
        self._check(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t.get(m, 0) + c
        return OperatorExpr(self.frame, t)

    __radd__ = __add__

    def __neg__(self):
        return OperatorExpr(self.frame, {m: -c for m, c in self.terms.items()}, canonical=True)

    def __sub__(self, other):
        if not isinstance(other, OperatorExpr):
            other = OperatorExpr.scalar(self.frame, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, OperatorExpr):
            return multiply(self, other)
        other = sp.sympify(other)
        if other.free_symbols:
            return multiply(self, OperatorExpr.scalar(self.frame, other))
        return OperatorExpr(self.frame, {m: c * other for m, c in self.terms.items()})

    def __rmul__(self, other):
        # scalars on the left stay left of the generators
        other = sp.sympify(other)
        return OperatorExpr(self.frame, {m: other * c for m, c in self.terms.items()})

    def __eq__(self, other):
        return (isinstance(other, OperatorExpr) and other.frame is self.frame
                and self.terms == other.terms)

    def __hash__(self):
        return hash((id(self.frame), tuple(self.terms.items())))

    # printing
    def _mono_parts(self, mono, latex: bool):
        parts = []
        for g, k in zip(self.frame.generators, mono):
            if not k:
                continue
            name = (g.latex or g.name) if latex else g.name
            if k == 1:
                parts.append(name)
            else:
                parts.append(f"{name}^{{{k}}}" if latex else f"{name}^{k}")
        return parts

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for mono, c in self.terms.items():
            parts = self._mono_parts(mono, False)
            cs = to_text(c)
            if not parts:
                out.append(cs)
            elif c == 1:
                out.append("*".join(parts))
            else:
                if isinstance(c, sp.Add):
                    cs = f"({cs})"
                out.append("*".join([cs] + parts))
        return " + ".join(out).replace("+ -", "- ")

    def to_latex(self, symmetrize: bool = True) -> str:
        """LaTeX rendering; first-order parts are shown as ``(c G)_+``."""
        if not self.terms:
            return "0"
        rest = self
        chunks = []
        if symmetrize:
            for mono, c in self.terms.items():
                if sum(mono) != 1 or c.has(I):
                    continue
                g = self.frame.generators[mono.index(1)]
                sym = symmetrized(OperatorExpr.scalar(self.frame, c), OperatorExpr.gen(self.frame, g.name))
                rest = rest - sym
                chunks.append(rf"\left({to_latex(c)}\,{g.latex or g.name}\right)_{{+}}")
        for mono, c in rest.terms.items():
            parts = self._mono_parts(mono, True)
            cl = to_latex(c)
            if isinstance(c, sp.Add) and parts:
                cl = rf"\left({cl}\right)"
            chunks.append(r"\,".join(([] if (c == 1 and parts) else [cl]) + parts))
        return " + ".join(chunks).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"OperatorExpr[{self.frame.name}]({self.to_text()})"


def _check_frames(a: OperatorExpr, b: OperatorExpr):
    if a.frame is not b.frame:
        raise FrameMismatchError(f"{a.frame.name} vs {b.frame.name}")


def multiply(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    """Normal-ordered product ``a * b``."""
    _check_frames(a, b)
    frame = a.frame
    gens = frame.generators
    acc: dict[tuple[int, ...], sp.Expr] = {}
    for beta, g in b.terms.items():
        cache: dict[tuple[int, ...], sp.Expr] = {frame.zero_mono(): g}

        def deriv(gamma):
            if gamma in cache:
                return cache[gamma]
            k = next(i for i, e in enumerate(gamma) if e)
            lower = list(gamma)
            lower[k] -= 1
            val = gens[k].apply(deriv(tuple(lower)))
            cache[gamma] = val
            return val

        for alpha, f in a.terms.items():
            for gamma in itertools.product(*(range(e + 1) for e in alpha)):
                dg = deriv(gamma)
                if dg == 0:
                    continue
                weight = 1
                for e, k in zip(alpha, gamma):
                    weight *= comb(e, k)
                order = sum(gamma)
                mono = tuple(x - y + z for x, y, z in zip(alpha, gamma, beta))
                if sum(mono) > MAX_DEGREE:
                    raise OperatorDegreeError(
                        f"product reaches conjugate degree {sum(mono)} > {MAX_DEGREE}")
                acc[mono] = acc.get(mono, 0) + weight * (-I) ** order * f * dg
    return OperatorExpr(frame, acc)


def commutator(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    return multiply(a, b) - multiply(b, a)


def symmetrized(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    """``(ab)_+ = (ab + ba)/2``."""
    return sp.Rational(1, 2) * (multiply(a, b) + multiply(b, a))


def _conj(c: sp.Expr) -> sp.Expr:
    return c.xreplace({I: -I})


def adjoint(a: OperatorExpr) -> OperatorExpr:
    """Reverse each term, conjugate ``i`` and re-normal-order.

    Coefficient symbols are real and generators self-adjoint, so
    ``(f G^alpha)^dagger = G^alpha f*``.
    """
    frame = a.frame
    out = OperatorExpr.zero(frame)
    for mono, c in a.terms.items():
        out = out + multiply(OperatorExpr(frame, {mono: 1}, canonical=True),
                             OperatorExpr.scalar(frame, _conj(c)))
    return out


def is_hermitian(a: OperatorExpr, tol: float = 1e-9, trials: int = 100, seed: int = 0) -> bool:
    return (adjoint(a) - a).is_zero(tol=tol, trials=trials, seed=seed)


def hermitize(a: OperatorExpr) -> OperatorExpr:
    """Return ``a + f`` with ``f = (a^dagger - a)/2``.

    For operators first order in the generators with real coefficients,
    ``f`` is free of generators; it is the reordering correction.
    """
    return a + sp.Rational(1, 2) * (adjoint(a) - a)
