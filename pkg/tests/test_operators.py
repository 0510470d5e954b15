import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from opmech.mechanics.chart import coordinate_frame
from opmech.operators import (FrameMismatchError, OperatorDegreeError, OperatorExpr, adjoint,
                              commutator, hermitize, is_hermitian, multiply, symmetrized)
from opmech.scalar import ANGLE, COORDINATE, PARAMETER, VELOCITY, SymbolTable

I = sp.I

T = SymbolTable()
X = [T.add(n, COORDINATE, i) for i, n in enumerate(("x1", "x2"))]
V = [T.add(f"v_{n}", VELOCITY, i, partner=n) for i, n in enumerate(("x1", "x2"))]
TH = T.add("theta", ANGLE, 2)
VTH = T.add("v_theta", VELOCITY, 2, partner="theta")
K = T.add("k", PARAMETER)
FR = coordinate_frame("test", T, X + [TH], V + [VTH])


def S(c):
    return OperatorExpr.scalar(FR, c)


def G(name, c=1):
    return OperatorExpr.gen(FR, name, c)


def test_single_rewrite():
    assert multiply(G("lambda_x1"), S(X[0])) == S(X[0]) * G("lambda_x1") - S(I)
    assert G("lambda_x1") * S(X[0]) == G("lambda_x1", X[0]) + S(-I)


def test_angle_rewrite():
    got = G("lambda_theta") * S(sp.sin(TH))
    assert got == G("lambda_theta", sp.sin(TH)) + S(-I * sp.cos(TH))


def test_free_streaming_square():
    Vl = G("lambda_x1", V[0])
    sq = Vl * Vl
    assert sq.terms == {tuple(2 * u for u in FR.unit("lambda_x1")): V[0] ** 2}


def test_commutator_examples():
    for i, x in enumerate(X):
        for j, y in enumerate(X):
            c = commutator(S(x), G(f"lambda_{y.name}"))
            assert c == S(I if i == j else 0)
            assert commutator(S(x), S(y)).is_zero()
            assert commutator(S(x), G(f"pi_{y.name}")).is_zero()
            assert commutator(S(V[i]), G(f"pi_{y.name}")) == S(I if i == j else 0)
    L = G("lambda_x1", V[0]) + G("lambda_x2", V[1])
    assert I * commutator(L, S(X[0])) == S(V[0])


def test_symmetrized_examples():
    F = K * X[0] ** 2
    assert symmetrized(S(F), G("pi_x1")) == G("pi_x1", F)
    assert symmetrized(S(VTH), G("pi_theta")) == G("pi_theta", VTH) + S(-I / 2)
    a = G("lambda_x1", X[1] * V[0]) + S(X[0])
    b = G("pi_x2", X[0] ** 2)
    assert symmetrized(a, b) == symmetrized(b, a)


def test_adjoint_examples():
    assert adjoint(G("lambda_x1", I)) == G("lambda_x1", -I)
    f = X[0] ** 3
    assert adjoint(G("lambda_x1", f)) == G("lambda_x1", f) + S(-I * 3 * X[0] ** 2)
    s = symmetrized(S(f), G("lambda_x1"))
    assert adjoint(s) == s


def test_hermiticity_examples():
    assert is_hermitian(G("lambda_x1"))
    assert is_hermitian(symmetrized(S(sp.sin(TH) * VTH), G("pi_theta")))
    # a velocity-dependent coefficient left of its own pi is not Hermitian
    unsym = G("pi_theta", -2 * VTH * V[0] * sp.cos(TH) / sp.sin(TH))
    assert not is_hermitian(unsym)
    assert is_hermitian(hermitize(unsym))


def test_hermitize_examples():
    f = X[0] ** 2 * sp.cos(TH)
    assert hermitize(G("lambda_x1", f)) == symmetrized(S(f), G("lambda_x1"))
    h = symmetrized(S(V[0] ** 2), G("pi_x1"))
    assert hermitize(h) == h


def test_frame_mismatch_and_degree_cap():
    other = coordinate_frame("other", T, X, V)
    with pytest.raises(FrameMismatchError):
        multiply(G("lambda_x1"), OperatorExpr.gen(other, "lambda_x1"))
    a = G("lambda_x1") * G("lambda_x1")
    with pytest.raises(OperatorDegreeError):
        a * a * G("pi_x1")


def test_text_and_latex():
    op = symmetrized(S(V[0]), G("pi_x1"))
    assert "pi_x1" in op.to_text()
    assert r"\pi" in op.to_latex()


# properties ------------------------------------------------------------------

GENS = ["lambda_x1", "lambda_x2", "pi_x1", "pi_x2", "lambda_theta", "pi_theta"]
COEFFS = [sp.Integer(1), X[0], X[1], V[0], V[1], VTH, X[0] * V[1], sp.sin(TH), sp.cos(TH) * V[0],
          K * X[0] ** 2]


def terms():
    return st.tuples(st.sampled_from(COEFFS), st.lists(st.sampled_from(GENS), max_size=2),
                     st.integers(-2, 2).filter(lambda n: n != 0))


def ops(max_terms=3):
    def build(ts):
        out = OperatorExpr.zero(FR)
        for c, gens, n in ts:
            t = S(n * c)
            for g in gens:
                t = t * G(g)
            out = out + t
        return out
    return st.lists(terms(), min_size=1, max_size=max_terms).map(build)


def small_ops():
    # degree <= 1 so triple products stay under the degree cap
    return st.lists(st.tuples(st.sampled_from(COEFFS), st.lists(st.sampled_from(GENS), max_size=1),
                              st.integers(-2, 2).filter(lambda n: n != 0)),
                    min_size=1, max_size=3).map(
        lambda ts: sum((S(n * c) * (G(g[0]) if g else S(1)) for c, g, n in ts), OperatorExpr.zero(FR)))


@settings(max_examples=25, deadline=None)
@given(small_ops(), small_ops(), small_ops())
def test_jacobi(a, b, c):
    j = (commutator(commutator(a, b), c) + commutator(commutator(b, c), a)
         + commutator(commutator(c, a), b))
    assert j.is_zero()


@settings(max_examples=25, deadline=None)
@given(small_ops(), small_ops(), small_ops())
def test_associativity(a, b, c):
    assert ((a * b) * c - a * (b * c)).is_zero()


@settings(max_examples=25, deadline=None)
@given(small_ops(), small_ops(), small_ops())
def test_leibniz(a, b, c):
    assert (commutator(a, b * c) - (commutator(a, b) * c + b * commutator(a, c))).is_zero()


@settings(max_examples=30, deadline=None)
@given(ops())
def test_adjoint_involution_and_normal_order_projection(a):
    assert (adjoint(adjoint(a)) - a).is_zero()
    assert OperatorExpr(FR, a.terms) == a
    assert (a * S(1) - a).is_zero()


@settings(max_examples=30, deadline=None)
@given(ops())
def test_hermitize_is_hermitian(a):
    assert is_hermitian(hermitize(a))


@settings(max_examples=30, deadline=None)
@given(small_ops())
def test_hermitize_first_order_adds_no_generators(a):
    f = hermitize(a) - a
    assert f.is_conjugate_free()
    for s in X + V + [sp.sin(TH), VTH]:
        assert commutator(f, S(s)).is_zero()
