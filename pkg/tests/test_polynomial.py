import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from deepnarrow.compilers.square import plan_monomial_chain
from deepnarrow.polynomial import Polynomial, PolynomialParseError, parse, poly_oracle


def test_examples():
    p = parse("x1^2 + x1")
    assert poly_oracle(p)(np.array([1.5])) == 3.75
    assert poly_oracle(Polynomial(1, ()))(np.array([[2.0], [3.0]])).tolist() == [0.0, 0.0]


def test_normalisation():
    p = Polynomial(2, ((1.0, (1, 0)), (2.0, (1, 0)), (0.0, (0, 1)), (-1.0, (0, 2)), (1.0, (0, 2))))
    assert p.terms == ((3.0, (1, 0)),)
    q = parse("x2 + x1^2*x2 + 3 + x1")
    assert [e for _, e in q.terms] == sorted(e for _, e in q.terms)


@pytest.mark.parametrize(
    "text,n,expected",
    [
        ("2*x1^3 - x1", 1, {(3,): 2.0, (1,): -1.0}),
        ("-x1*x2 + 1e-3*x2^2", 2, {(1, 1): -1.0, (0, 2): 1e-3}),
        ("x1 x1", 1, {(2,): 1.0}),
        ("0.5 * x3", 3, {(0, 0, 1): 0.5}),
        ("1.5e+2", 1, {(0,): 150.0}),
    ],
)
def test_parse(text, n, expected):
    p = parse(text)
    assert p.n_vars == n and p.as_dict() == expected


@pytest.mark.parametrize("text", ["", "x1 +", "x0", "2 ** x1", "y1", "x1^-2"])
def test_parse_errors(text):
    with pytest.raises(PolynomialParseError):
        parse(text)
    with pytest.raises(PolynomialParseError):
        parse("x3", 2)


def test_chain_plans():
    assert len(plan_monomial_chain((2, 1, 1))) - 1 == 3
    assert plan_monomial_chain((2, 1, 1)) == [2, 1, 0, 0]
    assert len(plan_monomial_chain((1,))) - 1 == 0
    assert len(plan_monomial_chain((3,))) - 1 == 2
    assert plan_monomial_chain((0, 0)) == []


coeffs = st.floats(-5, 5, allow_nan=False).filter(lambda c: abs(c) > 1e-3)


@st.composite
def polys(draw, n=2):
    terms = draw(st.lists(st.tuples(coeffs, st.tuples(*[st.integers(0, 3)] * n)), min_size=1, max_size=5))
    return Polynomial(n, tuple(terms))


def _sympy(p, xs):
    return sum(c * sympy.Mul(*[x**e for x, e in zip(xs, exps)]) for c, exps in p.terms)


@settings(max_examples=40, deadline=None)
@given(polys(), st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_evaluation_matches_sympy(p, point):
    xs = sympy.symbols("x1 x2")
    ref = float(_sympy(p, xs).subs(dict(zip(xs, point))))
    assert p(np.array(point)) == pytest.approx(ref, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(polys(), st.floats(0.1, 3), st.floats(-2, 2), st.floats(-1, 1), st.floats(-1, 1))
def test_compose_affine(p, a, b, z1, z2):
    q = p.compose_affine([a, 1.0], [b, 0.0])
    assert q(np.array([z1, z2])) == pytest.approx(p(np.array([a * z1 + b, z2])), rel=1e-9, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(polys())
def test_str_round_trip(p):
    back = parse(str(p), p.n_vars)
    assert back.as_dict().keys() == p.as_dict().keys()
    for e, c in p.as_dict().items():
        assert back.as_dict()[e] == c


def test_arithmetic():
    x = Polynomial.variable(1, 0)
    p = (x + Polynomial.constant(1, 1.0)) ** 2
    assert p.as_dict() == {(0,): 1.0, (1,): 2.0, (2,): 1.0}
    assert (2 * x).as_dict() == {(1,): 2.0}
    assert p.degree == 2 and len(p) == 3
