"""Liouvillian construction, change of chart, reduction and Heisenberg EOM."""
from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from ..operators import OperatorExpr, commutator, hermitize, symmetrized
from ..scalar import ANGLE, PARAMETER, canon, to_latex, to_text
from .chart import ConjugateTransform, conjugate_transform, coordinate_probes, lambda_name, pi_name
from .system import SystemSpec

I = sp.I


class DerivationError(RuntimeError):
    """A derivation produced something structurally impossible."""


@dataclass
class DerivedEOM:
    """``dq_j/dt = v_j`` and ``dv_j/dt = a_j(q, v)`` on the reduced phase space."""

    system: SystemSpec
    coords: tuple[sp.Symbol, ...]
    vels: tuple[sp.Symbol, ...]
    velocity: tuple[sp.Expr, ...]
    accel: tuple[sp.Expr, ...]
    liouvillian: OperatorExpr | None = None
    constraint_forces: tuple[sp.Expr, ...] = ()
    source: str = "heisenberg"
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.coords)

    def rhs(self) -> tuple[sp.Expr, ...]:
        return tuple(self.velocity) + tuple(self.accel)

    def state_symbols(self) -> tuple[sp.Symbol, ...]:
        return tuple(self.coords) + tuple(self.vels)

    def to_text(self) -> str:
        lines = []
        for q, v in zip(self.coords, self.velocity):
            lines.append(f"d{q}/dt = {to_text(v)}")
        for w, a in zip(self.vels, self.accel):
            lines.append(f"d{w}/dt = {to_text(a)}")
        return "\n".join(lines) + "\n"

    def to_latex(self) -> str:
        rows = []
        for q, v in zip(self.coords, self.velocity):
            rows.append(rf"\frac{{d{sp.latex(q)}}}{{dt}} &= {to_latex(v)}")
        for w, a in zip(self.vels, self.accel):
            rows.append(rf"\frac{{d{sp.latex(w)}}}{{dt}} &= {to_latex(a)}")
        return "\\begin{align}\n" + " \\\\\n".join(rows) + "\n\\end{align}\n"


def constraint_force_symbols(sys: SystemSpec) -> tuple[sp.Symbol, ...]:
    """Opaque Cartesian constraint-force symbols ``R_x, R_y, ...``."""
    return tuple(sys.table.get(f"R_{X.name}") or sys.table.add(f"R_{X.name}", PARAMETER)
                 for X in sys.chart.cart)


def build_liouvillian_cartesian(sys: SystemSpec, include_constraint_forces: bool = False
                                ) -> OperatorExpr:
    """``L = sum V_i lambda_i + sum (1/m_i)(F_i pi_i)_+``.

    With ``include_constraint_forces`` the unknown constraint forces enter as
    opaque symbols ``R_i`` through ``(R_i pi_i)_+ / m_i``.
    """
    fr = sys.cartesian_frame
    F = sys.impressed_forces
    if len(F) != sys.chart.n:
        raise ValueError("missing force entry")
    L = OperatorExpr.zero(fr)
    R = constraint_force_symbols(sys) if include_constraint_forces and sys.l else None
    for i, (X, V, m) in enumerate(zip(sys.chart.cart, sys.chart.cart_vel, sys.masses)):
        L = L + OperatorExpr.gen(fr, lambda_name(X), V)
        pi = OperatorExpr.gen(fr, pi_name(X))
        if F[i] != 0:
            L = L + symmetrized(OperatorExpr.scalar(fr, F[i] / m), pi)
        if R is not None:
            L = L + symmetrized(OperatorExpr.scalar(fr, R[i] / m), pi)
    return L


def transform_liouvillian(L: OperatorExpr, sys: SystemSpec,
                          transform: ConjugateTransform | None = None) -> OperatorExpr:
    """Rewrite a Cartesian operator in ``(q, v, lambda^(q), pi^(q))``.

    Coefficients are pulled back through the chart and each Cartesian
    generator is replaced by its expression in generalized generators.  The
    replacement preserves all commutators, so it is an algebra homomorphism
    and may be applied term by term.
    """
    chart = sys.chart
    t = transform or transformation(sys)
    fr = sys.generalized_frame
    if t.generalized is not fr:
        t = _rebase(t, fr)
    images = {}
    for j, X in enumerate(chart.cart):
        images[lambda_name(X)] = t.lam_cart[j]
        images[pi_name(X)] = t.pi_cart[j]
    out = OperatorExpr.zero(fr)
    gens = L.frame.generators
    for mono, c in L.terms.items():
        term = OperatorExpr.scalar(fr, chart.to_chart(c))
        for k, e in enumerate(mono):
            for _ in range(e):
                term = term * images[gens[k].name]
        out = out + term
    return out


def _rebase(t: ConjugateTransform, fr) -> ConjugateTransform:
    def move(op):
        return OperatorExpr(fr, op.terms, canonical=True)
    return ConjugateTransform(t.chart, t.chain, fr, t.lam_q, t.pi_q,
                              [move(o) for o in t.lam_cart], [move(o) for o in t.pi_cart])


def transformation(sys: SystemSpec) -> ConjugateTransform:
    """Cached conjugate transform of the system chart."""
    t = sys._cache.get("transform")
    if t is None:
        t = _rebase(conjugate_transform(sys.chart), sys.generalized_frame)
        sys._cache["transform"] = t
    return t


def _schur_correction(sys: SystemSpec, coeffs: dict) -> dict:
    """Add the constraint-force share that leaks into unconstrained accelerations.

    With ``a_c = 0`` enforced, the ideal constraint force has generalized
    components only along the constrained coordinates, ``rho_c``, and moves
    the free accelerations by ``(M^-1)_{nc} rho``.  For charts whose
    constrained directions are orthogonal to the rest this is zero.
    """
    from .dynamics import kinetic_metric
    n, N = sys.n, sys.chart.n
    Mfull = kinetic_metric(sys, reduced=False).applyfunc(sys.on_tq)
    if all(Mfull[i, c] == 0 for i in range(n) for c in range(n, N)):
        return coeffs
    Minv = Mfull.inv().applyfunc(lambda e: canon(sp.simplify(e)))
    a_free_c = sp.Matrix([coeffs.get(pi_name(sys.chart.gen[c]), 0) for c in range(n, N)])
    rho = -Minv[n:, n:].inv() * a_free_c
    shift = Minv[:n, n:] * rho
    out = dict(coeffs)
    for i in range(n):
        key = pi_name(sys.chart.gen[i])
        out[key] = canon(sp.simplify(out.get(key, 0) + shift[i]))
    return out


def reduce_liouvillian(L: OperatorExpr, sys: SystemSpec) -> OperatorExpr:
    """Restrict a generalized-frame Liouvillian to the constraint manifold.

    Substitutes ``q_c -> C_c``, ``v_c -> 0`` and drops every term carrying a
    generator of a constrained coordinate (their Heisenberg derivatives vanish
    on the constraint manifold).  Opaque constraint-force symbols are set to
    zero: an ideal constraint force has no generalized component along the
    unconstrained coordinates.  The result is hermitized in the reduced frame.
    """
    if sys.l == 0:
        return hermitize(L.conjugate_part()) if L.frame is sys.generalized_frame else L
    red = sys.reduced_frame
    full = L.frame
    kept_names = {g.name for g in red.generators}
    R = [s for s in (sys.table.get(f"R_{X.name}") for X in sys.chart.cart) if s is not None]
    sub = dict(sys.tq_substitution)
    sub.update({r: 0 for r in R})
    first_order: dict[str, sp.Expr] = {}
    higher = {}
    for mono, c in L.terms.items():
        if sum(mono) == 0:
            continue
        names = [full.generators[k].name for k, e in enumerate(mono) if e]
        if not all(nm in kept_names for nm in names):
            if sum(mono) == 1:
                first_order[names[0]] = canon(c.xreplace(sub))
            continue
        c = canon(c.xreplace(sub))
        if sum(mono) == 1:
            first_order[names[0]] = c
        else:
            higher[mono] = c
    first_order = _schur_correction(sys, first_order)
    terms = {}
    for name, c in first_order.items():
        if name in kept_names:
            terms[red.unit(name)] = c
    for mono, c in higher.items():
        m = [0] * red.n
        for k, e in enumerate(mono):
            if e:
                m[red.index(full.generators[k].name)] = e
        terms[tuple(m)] = c
    out = OperatorExpr(red, terms)
    banned = set(sys.constrained) | set(sys.chart.gen_vel[sys.n:]) | set(R)
    for c in out.terms.values():
        left = c.free_symbols & banned
        if left:
            raise DerivationError(f"constrained symbols survived reduction: {sorted(map(str, left))}")
    return hermitize(out)


def liouvillian(sys: SystemSpec) -> OperatorExpr:
    """The reduced, hermitized Liouvillian in generalized coordinates (cached)."""
    L = sys._cache.get("L_reduced")
    if L is None:
        Lc = build_liouvillian_cartesian(sys)
        if sys.chart.is_identity and sys.l == 0 and tuple(sys.chart.cart) == tuple(sys.chart.gen):
            L = OperatorExpr(sys.generalized_frame, Lc.terms, canonical=True)
        else:
            L = transform_liouvillian(Lc, sys)
        L = reduce_liouvillian(L, sys)
        sys._cache["L_reduced"] = L
    return L


def heisenberg_eom(L: OperatorExpr, sys: SystemSpec) -> DerivedEOM:
    """``dq/dt = i[L, q]`` and ``dv/dt = i[L, v]`` in the reduced frame.

    Angles are probed through ``sin``: ``i[L, sin q] = cos q * dq/dt``.
    """
    fr = L.frame
    vel, acc = [], []
    for q, v in zip(sys.coords, sys.vels):
        f, df = coordinate_probes(sys.table, q)[0]
        rate = I * commutator(L, OperatorExpr.scalar(fr, f))
        if not rate.is_conjugate_free():
            raise DerivationError(f"d{q}/dt contains conjugate generators")
        qdot = canon(sp.cancel(rate.coeff() / df)) if df != 1 else rate.coeff()
        vel.append(canon(qdot))
        a = I * commutator(L, OperatorExpr.scalar(fr, v))
        if not a.is_conjugate_free():
            raise DerivationError(f"d{v}/dt contains conjugate generators")
        acc.append(a.coeff())
    return DerivedEOM(sys, sys.coords, sys.vels, tuple(vel), tuple(acc), L)


def derive(sys: SystemSpec) -> DerivedEOM:
    """Heisenberg equations of the reduced Liouvillian, with constraint forces."""
    eom = sys._cache.get("eom")
    if eom is None:
        from .dynamics import constraint_forces
        eom = heisenberg_eom(liouvillian(sys), sys)
        eom.constraint_forces = constraint_forces(sys, eom)
        sys._cache["eom"] = eom
    return eom


def is_angle(sys: SystemSpec, q) -> bool:
    return sys.table.info(q).kind == ANGLE
