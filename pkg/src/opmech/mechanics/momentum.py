"""Canonical momentum, the momentum-frame Liouvillian and minimal coupling."""
from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from ..operators import OperatorExpr, commutator, hermitize, symmetrized
from ..scalar import canon
from .chart import coordinate_probes, lambda_name, pi_name
from .dynamics import _simp, generalized_forces, inverse_metric, kinetic_metric
from .liouvillian import DerivationError, liouvillian
from .report import Report
from .system import SystemSpec

I = sp.I
MUTATIONS = (None, "bare_lambda", "unscaled_pi")


def generalized_vector_potential(sys: SystemSpec) -> tuple[sp.Expr, ...]:
    """``A_i = sum_l A_l(X(q)) dX_l/dq_i`` on the constraint manifold."""
    n = sys.n
    if sys.vector_potential is None:
        return (sp.Integer(0),) * n
    J = sys.chart.jac_fwd
    A = [sys.chart.to_chart(a) for a in sys.vector_potential]
    return tuple(sys.on_tq(_simp(sum(A[l] * J[l, i] for l in range(sys.chart.n)))) for i in range(n))


@dataclass
class MomentumTransform:
    """``p = M v + A`` with ``lambda'``/``pi'`` written in the velocity frame.

    ``w[j][a] = sum_b v_b dm_ba/dq_j + dA_a/dq_j`` is the bracket that links
    the two frames: ``lambda_j = lambda'_j + sum_a w_ja pi'_a``.
    """

    system: SystemSpec
    p: tuple[sp.Expr, ...]
    lam: list[OperatorExpr]
    pi: list[OperatorExpr]
    w: list[list[sp.Expr]]
    report: Report


def _w_matrix(sys: SystemSpec) -> list[list[sp.Expr]]:
    M = kinetic_metric(sys)
    A = generalized_vector_potential(sys)
    q, v, n = sys.coords, sys.vels, sys.n
    return [[canon(sum(v[b] * sp.diff(M[b, a], q[j]) for b in range(n)) + sp.diff(A[a], q[j]))
             for a in range(n)] for j in range(n)]


def canonical_momentum_transform(sys: SystemSpec, mutation: str | None = None,
                                 tol: float = 1e-9, trials: int = 100, seed: int = 0
                                 ) -> MomentumTransform:
    """Momenta and primed generators, plus a report on all their commutators.

    ``mutation`` deliberately breaks the transform (negative control):
    ``"bare_lambda"`` uses ``lambda' = lambda``, ``"unscaled_pi"`` uses
    ``pi' = pi``.
    """
    if mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}")
    fr = sys.reduced_frame
    n = sys.n
    M = kinetic_metric(sys)
    Minv = inverse_metric(sys)
    A = generalized_vector_potential(sys)
    q, v = sys.coords, sys.vels
    p = tuple(canon(sum(M[i, k] * v[k] for k in range(n)) + A[i]) for i in range(n))
    w = _w_matrix(sys)
    pis = [OperatorExpr.gen(fr, pi_name(qj)) for qj in q]
    pi_p, lam_p = [], []
    for j in range(n):
        if mutation == "unscaled_pi":
            pi_p.append(pis[j])
        else:
            pi_p.append(OperatorExpr(fr, {fr.unit(pi_name(q[l])): Minv[l, j] for l in range(n)}))
        lam = OperatorExpr.gen(fr, lambda_name(q[j]))
        if mutation != "bare_lambda":
            for l in range(n):
                c = canon(sum(Minv[l, a] * w[j][a] for a in range(n)))
                if c != 0:
                    lam = lam - OperatorExpr.gen(fr, pi_name(q[l]), c)
        lam_p.append(lam)

    rep = Report(f"momentum frame {sys.name}" + (f" [mutated: {mutation}]" if mutation else ""))

    def row(name, got: OperatorExpr, want):
        diff = got - OperatorExpr.scalar(fr, want)
        ok = diff.is_zero(tol=tol, trials=trials, seed=seed)
        rep.add(name, want, got.to_text() if ok else f"residual {diff.to_text()}", ok)

    for i in range(n):
        for f, df in coordinate_probes(sys.table, q[i]):
            F = OperatorExpr.scalar(fr, f)
            for j in range(n):
                row(f"[{f}, lambda'_{q[j]}]", commutator(F, lam_p[j]), I * df if i == j else 0)
                row(f"[{f}, pi'_{q[j]}]", commutator(F, pi_p[j]), 0)
        P = OperatorExpr.scalar(fr, p[i])
        for j in range(n):
            row(f"[p_{q[i]}, pi'_{q[j]}]", commutator(P, pi_p[j]), I if i == j else 0)
            row(f"[p_{q[i]}, lambda'_{q[j]}]", commutator(P, lam_p[j]), 0)
    for i in range(n):
        for j in range(n):
            row(f"[lambda'_{q[i]}, pi'_{q[j]}]", commutator(lam_p[i], pi_p[j]), 0)
            if i < j:
                row(f"[lambda'_{q[i]}, lambda'_{q[j]}]", commutator(lam_p[i], lam_p[j]), 0)
                row(f"[pi'_{q[i]}, pi'_{q[j]}]", commutator(pi_p[i], pi_p[j]), 0)
    return MomentumTransform(sys, p, lam_p, pi_p, w, rep)


def velocity_of_momentum(sys: SystemSpec) -> dict:
    """``v = M^-1 (p - A)`` as a substitution into momentum symbols."""
    Minv = inverse_metric(sys)
    A = generalized_vector_potential(sys)
    P = sys.momenta
    n = sys.n
    return {sys.vels[i]: canon(sum(Minv[i, k] * (P[k] - A[k]) for k in range(n))) for i in range(n)}


def to_momentum_frame(op: OperatorExpr, sys: SystemSpec) -> OperatorExpr:
    """Rewrite a reduced velocity-frame operator in ``(q, p, lambda', pi')``.

    ``lambda_j -> lambda'_j + sum_a w_ja pi'_a`` and
    ``pi_l -> sum_j m_lj pi'_j``, coefficients through ``v = M^-1 (p - A)``.
    """
    if op.frame is not sys.reduced_frame:
        raise DerivationError("operator is not in the reduced velocity frame")
    mf = sys.momentum_frame
    M = kinetic_metric(sys)
    vsub = velocity_of_momentum(sys)
    w = _w_matrix(sys)
    q, n = sys.coords, sys.n
    images = {}
    for j in range(n):
        lam = OperatorExpr.gen(mf, f"lambdap_{q[j].name}")
        for a in range(n):
            c = canon(w[j][a].xreplace(vsub))
            if c != 0:
                lam = lam + OperatorExpr.gen(mf, f"pip_{q[a].name}", c)
        images[lambda_name(q[j])] = lam
        images[pi_name(q[j])] = OperatorExpr(mf, {mf.unit(f"pip_{q[k].name}"): M[j, k] for k in range(n)})
    out = OperatorExpr.zero(mf)
    gens = op.frame.generators
    for mono, c in op.terms.items():
        term = OperatorExpr.scalar(mf, canon(sp.sympify(c).xreplace(vsub)))
        for k, e in enumerate(mono):
            for _ in range(e):
                term = term * images[gens[k].name]
        out = out + term
    return out


def hamiltonian(sys: SystemSpec) -> sp.Expr:
    """``H = 1/2 (p - A)^T M^-1 (p - A) + phi`` in momentum symbols."""
    Minv = inverse_metric(sys)
    A = generalized_vector_potential(sys)
    P = sys.momenta
    n = sys.n
    H = sp.Rational(1, 2) * sum(Minv[i, j] * (P[i] - A[i]) * (P[j] - A[j])
                                for i in range(n) for j in range(n))
    if sys.potential is not None:
        H = H + sys.on_tq(sys.chart.to_chart(sys.potential))
    return canon(H)


def _require_monogenic(sys: SystemSpec):
    if sys.forces is not None and any(sp.sympify(f) != 0 for f in sys.forces):
        raise DerivationError("momentum-frame Liouvillian needs forces from a potential")


def kvn_liouvillian(sys: SystemSpec) -> OperatorExpr:
    """Momentum-frame Liouvillian built from the metric, hermitized.

    ``L = sum m^-1_ij p_i lambda'_j
          + sum_j (1/2 p^T M^-1 dM/dq_j M^-1 p + Q_j) pi'_j + f``
    with ``Q_j = -d phi/dq_j``.  Requires ``A = 0``.
    """
    if any(a != 0 for a in generalized_vector_potential(sys)):
        raise DerivationError("metric form of the momentum Liouvillian assumes A = 0")
    _require_monogenic(sys)
    mf = sys.momentum_frame
    Minv = inverse_metric(sys)
    M = kinetic_metric(sys)
    P = sp.Matrix(sys.momenta)
    q, n = sys.coords, sys.n
    vsub = velocity_of_momentum(sys)
    Q = [canon(e.xreplace(vsub)) for e in generalized_forces(sys)]
    L = OperatorExpr.zero(mf)
    for j in range(n):
        c = canon(sum(Minv[i, j] * P[i] for i in range(n)))
        L = L + OperatorExpr.gen(mf, f"lambdap_{q[j].name}", c)
        quad = (P.T * Minv * M.diff(q[j]) * Minv * P)[0, 0]
        L = L + OperatorExpr.gen(mf, f"pip_{q[j].name}", _simp(quad / 2 + Q[j]))
    return hermitize(L)


def hamiltonian_liouvillian(sys: SystemSpec, symmetrize: bool = True) -> OperatorExpr:
    """``sum (dH/dp_j lambda'_j - dH/dq_j pi'_j)``, symmetrized or with coefficients left."""
    _require_monogenic(sys)
    mf = sys.momentum_frame
    H = hamiltonian(sys)
    L = OperatorExpr.zero(mf)
    for q, p in zip(sys.coords, sys.momenta):
        lam = OperatorExpr.gen(mf, f"lambdap_{q.name}")
        pi = OperatorExpr.gen(mf, f"pip_{q.name}")
        a = OperatorExpr.scalar(mf, sp.diff(H, p))
        b = OperatorExpr.scalar(mf, -sp.diff(H, q))
        if symmetrize:
            L = L + symmetrized(a, lam) + symmetrized(b, pi)
        else:
            L = L + a * lam + b * pi
    return L


def momentum_frame_equivalence(sys: SystemSpec, tol: float = 1e-9, trials: int = 100, seed: int = 0
                         ) -> Report:
    """Independent momentum-frame constructions agree up to generator-free terms.

    Compared against the metric form: the Poisson-bracket Liouvillian
    (hermitized), its symmetrized Hamiltonian rendering, and the image of the
    reduced velocity-frame Liouvillian under the momentum map.
    """
    rep = Report(f"momentum-frame Liouvillian {sys.name}")
    ref = kvn_liouvillian(sys)
    routes = {
        "poisson bracket, hermitized": hermitize(hamiltonian_liouvillian(sys, symmetrize=False)),
        "hamiltonian, symmetrized": hamiltonian_liouvillian(sys, symmetrize=True),
        "velocity frame mapped": to_momentum_frame(liouvillian(sys), sys),
    }
    for name, op in routes.items():
        diff = (op - ref).conjugate_part()
        ok = diff.is_zero(tol=tol, trials=trials, seed=seed)
        rep.add(f"{name} - metric form", "conjugate-free", "conjugate-free" if ok else diff.to_text(), ok)
    return rep


# minimal coupling -----------------------------------------------------------

def _series_conjugate(S: OperatorExpr, B: OperatorExpr, cap: int = 8) -> OperatorExpr:
    """``exp(S) B exp(-S) = sum ad_S^k B / k!`` until a term vanishes."""
    out = B
    term = B
    for k in range(1, cap + 1):
        term = commutator(S, term) * sp.Rational(1, k)
        if not term.terms:
            return out
        out = out + term
    raise DerivationError("conjugation series did not terminate; A must not depend on V")


def verify_unitary_C(sys: SystemSpec, tol: float = 1e-9, trials: int = 100, seed: int = 0) -> Report:
    """``C = exp(sum (i/m_i) A_i pi_i)`` maps ``X, mV, lambda, pi/m`` to ``X, P, lambda', pi'``.

    The generator is written with the velocity-frame ``pi``; the passage to
    ``pi' = pi/m`` is the separate scale transformation.
    """
    if sys.l or not sys.chart.is_identity:
        raise DerivationError("unitary minimal-coupling check works in Cartesian coordinates")
    fr = sys.reduced_frame
    X, V = sys.coords, sys.vels
    A = generalized_vector_potential(sys)
    for a in A:
        if a.free_symbols & set(V):
            raise DerivationError("vector potential must be position-only")
    mt = canonical_momentum_transform(sys)
    S = OperatorExpr.zero(fr)
    for i, x in enumerate(X):
        if A[i] != 0:
            S = S + OperatorExpr.gen(fr, pi_name(x), I * A[i] / sys.masses[i])
    rep = Report(f"unitary C {sys.name}")

    def row(name, got, want):
        diff = got - want
        ok = diff.is_zero(tol=tol, trials=trials, seed=seed)
        rep.add(name, want.to_text(), got.to_text() if ok else f"residual {diff.to_text()}", ok)

    for i, x in enumerate(X):
        m = sys.masses[i]
        row(f"C {x} C^-1", _series_conjugate(S, OperatorExpr.scalar(fr, x)), OperatorExpr.scalar(fr, x))
        row(f"C m v_{x} C^-1", _series_conjugate(S, OperatorExpr.scalar(fr, m * V[i])),
            OperatorExpr.scalar(fr, mt.p[i]))
        row(f"C lambda_{x} C^-1", _series_conjugate(S, OperatorExpr.gen(fr, lambda_name(x))), mt.lam[i])
        row(f"C (pi_{x}/m) C^-1", _series_conjugate(S, OperatorExpr.gen(fr, pi_name(x), 1 / m)), mt.pi[i])
    return rep


def minimal_coupling_liouvillian(sys: SystemSpec) -> OperatorExpr:
    """Cartesian momentum-frame Liouvillian in minimal-coupling form.

    ``L = sum (P_i - A_i)/m_i lambda'_i + sum (F_i pi'_i)_+
          + sum_ij dA_j/dX_i ((P_i - A_i)/m_i pi'_j)_+``
    with ``F`` evaluated at ``V = (P - A)/m``.
    """
    if sys.l or not sys.chart.is_identity:
        raise DerivationError("minimal coupling form is Cartesian")
    mf = sys.momentum_frame
    X, P = sys.coords, sys.momenta
    A = generalized_vector_potential(sys)
    vsub = velocity_of_momentum(sys)
    F = [canon(sys.chart.to_chart(f).xreplace(vsub)) for f in sys.impressed_forces]
    L = OperatorExpr.zero(mf)
    for i, x in enumerate(X):
        m = sys.masses[i]
        L = L + OperatorExpr.gen(mf, f"lambdap_{x.name}", (P[i] - A[i]) / m)
        L = L + symmetrized(OperatorExpr.scalar(mf, F[i]), OperatorExpr.gen(mf, f"pip_{x.name}"))
        for j, y in enumerate(X):
            d = sp.diff(A[j], x)
            if d != 0:
                L = L + symmetrized(OperatorExpr.scalar(mf, d * (P[i] - A[i]) / m),
                                    OperatorExpr.gen(mf, f"pip_{y.name}"))
    return L


def minimal_coupling_check(sys: SystemSpec, tol: float = 1e-9, trials: int = 100, seed: int = 0
                           ) -> Report:
    """``P = mV + A`` and the mapped Liouvillian against the minimal-coupling form."""
    rep = Report(f"minimal coupling {sys.name}")
    mt = canonical_momentum_transform(sys, tol=tol, trials=trials, seed=seed)
    A = generalized_vector_potential(sys)
    for i, x in enumerate(sys.coords):
        want = canon(sys.masses[i] * sys.vels[i] + A[i])
        rep.add(f"p_{x}", want, mt.p[i], canon(mt.p[i] - want) == 0)
    mapped = to_momentum_frame(liouvillian(sys), sys)
    form = minimal_coupling_liouvillian(sys)
    diff = mapped - form
    ok = diff.conjugate_part().is_zero(tol=tol, trials=trials, seed=seed)
    rep.add("mapped L - minimal coupling form (generators)", 0,
            0 if ok else diff.conjugate_part().to_text(), ok)
    div = canon(sum(sp.diff(a, x) / m for a, x, m in zip(A, sys.coords, sys.masses)))
    want_scalar = canon(-I * div / 2)
    got_scalar = canon(diff.coeff())
    rep.add("mapped L - minimal coupling form (scalar)", want_scalar, got_scalar,
            canon(got_scalar - want_scalar) == 0)
    return rep
