from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from realradical.errors import (DimensionMismatch, EmptyPolynomial, MalformedTerm, UnknownVariable,
                                ZeroPolynomial)
from realradical.polysys import (GREVLEX, GRLEX, LEX, MonomialOrder, PolySystem, Polynomial,
                                 compare, enumerate_monomials, evaluate, format_polynomial,
                                 half_degree, parse_polynomial)


def test_enumerate_index_order_small():
    assert enumerate_monomials(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


@pytest.mark.parametrize("n,t,size", [(2, 2, 6), (6, 3, 84), (1, 0, 1)])
def test_enumerate_sizes(n, t, size):
    monos = enumerate_monomials(n, t, MonomialOrder(GRLEX))
    assert len(monos) == size and monos[0] == (0,) * n


@given(st.integers(1, 4), st.integers(0, 4), st.sampled_from([GRLEX, GREVLEX, LEX]))
def test_enumerate_sorted_is_strictly_increasing(n, t, kind):
    order = MonomialOrder(kind)
    monos = enumerate_monomials(n, t, order)
    assert len(monos) == comb(n + t, n)
    assert all(compare(order, a, b) == -1 for a, b in zip(monos, monos[1:]))


def test_index_order_blocks_are_nested():
    for t in range(4):
        assert enumerate_monomials(3, t + 1)[: comb(3 + t, 3)] == enumerate_monomials(3, t)


def test_compare_examples():
    grlex = MonomialOrder(GRLEX)
    assert compare(grlex, (2, 0), (1, 1)) == 1
    assert compare(grlex, (0, 3), (2, 0)) == 1
    # lex with y > x: variables (x, y), precedence lists y first
    lex_yx = MonomialOrder(LEX, (1, 0))
    assert compare(lex_yx, (0, 1), (2, 0)) == 1
    with pytest.raises(DimensionMismatch):
        compare(grlex, (1,), (1, 0))


exps = st.lists(st.integers(0, 4), min_size=3, max_size=3).map(tuple)


@given(exps, exps, exps, st.sampled_from([GRLEX, GREVLEX, LEX]))
def test_order_is_multiplicative(a, b, c, kind):
    order = MonomialOrder(kind)
    ac = tuple(x + y for x, y in zip(a, c))
    bc = tuple(x + y for x, y in zip(b, c))
    assert compare(order, a, b) == compare(order, ac, bc)


def test_parse_examples():
    p = parse_polynomial("x1^2 + x2^2", ["x1", "x2"])
    assert len(p.terms) == 2 and p.degree == 2
    names = [f"x{i}" for i in range(1, 7)]
    k1 = parse_polynomial("2*x6^2+2*x5^2+2*x4^2+2*x3^2+2*x2^2+x1^2-x1", names)
    assert len(k1.terms) == 7
    h = parse_polynomial("x1^3+x1", ["x1"])
    assert h.terms == {(3,): 1.0, (1,): 1.0}


def test_parse_merges_and_handles_numbers():
    p = parse_polynomial("x*y - 2.5e-1*y*x + 2/3 - 1", ["x", "y"])
    assert p.terms == {(1, 1): 0.75, (0, 0): 2 / 3 - 1}


@pytest.mark.parametrize("text,exc", [("x1 + z", UnknownVariable), ("x1 ** 2", MalformedTerm),
                                      ("", EmptyPolynomial), ("x1 + + x2", MalformedTerm)])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_polynomial(text, ["x1", "x2"])


polys = st.dictionaries(exps, st.floats(-50, 50, allow_nan=False).filter(lambda c: abs(c) > 1e-6),
                        min_size=1, max_size=6).map(lambda d: Polynomial(d, 3))


@given(polys)
def test_print_parse_round_trip(p):
    names = ["a", "b", "c"]
    q = parse_polynomial(format_polynomial(p, names), names)
    assert q == p


@given(polys, polys, st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3))
def test_evaluate_is_linear(p, q, v):
    lhs = evaluate(p + q, v)
    rhs = evaluate(p, v) + evaluate(q, v)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


def test_evaluate_examples():
    assert evaluate(parse_polynomial("x1^2+x2^2", ["x1", "x2"]), (0, 0)) == 0
    assert evaluate(parse_polynomial("x1^2*x2-2*x1^2", ["x1", "x2"]), (1, 2)) == 0
    assert evaluate(parse_polynomial("x1-3", ["x1"]), (3,)) == 0
    assert evaluate(parse_polynomial("x^2+1", ["x"]), (1j,)) == 0
    with pytest.raises(DimensionMismatch):
        evaluate(parse_polynomial("x1", ["x1"]), (1, 2))


@pytest.mark.parametrize("deg,d", [(3, 2), (2, 1), (4, 2), (1, 1)])
def test_half_degree(deg, d):
    assert half_degree(Polynomial({(deg,): 1.0})) == d


def test_half_degree_zero():
    with pytest.raises(ZeroPolynomial):
        half_degree(Polynomial({}, 1))


def test_system_degrees():
    s = PolySystem.from_strings(["x^3+x", "y-1"], ["x", "y"], ["1-x^2-y^2-x^4"])
    assert s.half_degrees == (2, 1, 2) and s.d == 2
    with pytest.raises(ValueError):
        PolySystem.from_strings([], ["x"])
    with pytest.raises(ValueError):
        PolySystem.from_strings(["3"], ["x"])


def test_polynomial_vector_round_trip():
    monos = enumerate_monomials(2, 3)
    p = parse_polynomial("x1*x2^2 - 4*x1 + 0.5", ["x1", "x2"])
    v = p.to_vector(monos)
    assert Polynomial.from_vector(v, monos) == p
    assert np.count_nonzero(v) == 3
