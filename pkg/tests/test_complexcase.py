from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from realradical import linalg
from realradical.complexcase import (ComplexMomentSequence, PrunedIndexSet,
                                     build_full_complex_problem, certify_complex_condition,
                                     complex_rank_report, conjugation_pairing_error,
                                     ensure_real_coefficients, full_matrix, pruned_matrix,
                                     solve_complex)
from realradical.errors import ComplexCoefficientsUnsupported, OrderTooSmall
from realradical.extract import Condition, ExtractionStatus
from realradical.moment import MomentSequence, assemble_moment_matrix
from realradical.polysys import PolySystem, enumerate_monomials, num_monomials
from realradical.sdp import Status

from conftest import extracted

CUBIC3 = ["x1^2 + x2 + x3 + 1", "x1 + x2^2 + x3 + 1", "x1 + x2 + x3^2 + 1"]


def _rank(M):
    return linalg.numerical_rank(linalg.svd(M).singular_values)


@lru_cache(maxsize=None)
def _run(eqs, names, t):
    return solve_complex(PolySystem.from_strings(list(eqs), list(names)), t)


def test_full_block_size_and_problem():
    p = build_full_complex_problem(PolySystem.from_strings(["x - 1"], ["x"]), 1)
    assert p.main.dim == 3
    # unordered pairs {g, g'} with |g| + |g'| <= 2: (0,0) (0,1) (0,2) (1,1)
    assert p.num_variables == 4
    with pytest.raises(OrderTooSmall):
        build_full_complex_problem(PolySystem.from_strings(CUBIC3, ["x1", "x2", "x3"]), 0)


def test_inequalities_rejected():
    with pytest.raises(ValueError):
        build_full_complex_problem(PolySystem.from_strings(["x - 1"], ["x"], ["x"]), 1)


def test_complex_coefficients_rejected():
    ensure_real_coefficients([{(1,): 1.0, (0,): -1.0}])
    with pytest.raises(ComplexCoefficientsUnsupported):
        ensure_real_coefficients([{(1,): 1.0, (0,): 1j}])


def test_pruned_index_set():
    idx = PrunedIndexSet.build(2, 2)
    assert len(idx) == num_monomials(2, 2)
    full = enumerate_monomials(4, 2)
    assert [full[i][2:] for i in idx.positions] == enumerate_monomials(2, 2)


def test_pruned_order_zero_and_point():
    y = ComplexMomentSequence.from_point([1.0], 2)
    assert np.array_equal(pruned_matrix(y, 0), [[1.0]])
    assert _rank(pruned_matrix(y)) == 1 and _rank(full_matrix(y)) == 1


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.integers(1, 3))
def test_real_point_pruned_equals_real_moment_matrix(v, t):
    y = ComplexMomentSequence.from_point(v, t)
    real = assemble_moment_matrix(MomentSequence.from_point(v, t), t)
    assert np.allclose(pruned_matrix(y), real, rtol=1e-12, atol=1e-12)
    assert _rank(full_matrix(y)) == 1


def test_pruned_rows_are_a_submatrix_of_full():
    rng = np.random.default_rng(7)
    pts = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    y = ComplexMomentSequence.from_measure(pts, [0.2, 0.3, 0.5], 2)
    F, P = full_matrix(y), pruned_matrix(y)
    pos = PrunedIndexSet.build(2, 2).positions
    assert np.array_equal(F[np.ix_(pos, pos)], P)


def test_conjugate_pair_measure_is_psd():
    # a conjugation-closed support with equal weights is a feasible real sequence
    y = ComplexMomentSequence.from_measure([[1j], [-1j]], [0.5, 0.5], 2)
    assert linalg.min_eig(full_matrix(y)) >= -1e-12
    assert _rank(pruned_matrix(y)) == 2
    assert y[((1,), (1,))] == pytest.approx(1.0) and y[((0,), (2,))] == pytest.approx(-1.0)


@pytest.mark.parametrize("full,pruned,d,expected", [
    ((1, 7, 7, 7), (1, 4, 7, 7), 1, (3, Condition.FLAT_D)),
    ((1, 1, 1), (1, 1, 1), 1, (1, Condition.FLAT_D)),
    ((1, 3, 6), (1, 2, 4), 1, None),
])
def test_certify_complex_examples(full, pruned, d, expected):
    assert certify_complex_condition(full, pruned, d) == expected


def test_single_root_system():
    # at t=1 only L(x - 1) = 0 is imposed, so flatness first shows at t=2
    run = _run(("x - 1",), ("x",), 2)
    assert run.outcome.status == Status.INTERIOR_POINT
    assert run.report.full.ranks[:2] == (1, 1) and run.report.s == 1
    assert np.allclose(run.result.points, [[1.0]], atol=1e-6)


def test_cubic_complex_roots():
    # x(x^2+1): roots 0, i, -i
    run = _run(("x^3 + x",), ("x",), 4)
    assert run.report.pruned.ranks[:4] == (1, 2, 3, 3)
    pts = run.result.points[:, 0]
    pts = pts[np.argsort(pts.imag)]
    assert np.allclose(pts, [-1j, 0, 1j], atol=1e-5)
    assert conjugation_pairing_error(run.result.points) <= 1e-6
    # the real roots contain the real-mode answer
    _, real = extracted("ex11", 3)
    for v in real.points.real:
        assert np.min(np.abs(pts - v[0])) <= 1e-5


def test_pairing_error():
    assert conjugation_pairing_error([[1j], [-1j]]) == 0.0
    assert conjugation_pairing_error([[1j]]) == pytest.approx(2.0)
    assert conjugation_pairing_error(np.zeros((0, 2))) == 0.0


def test_pruned_kernel_holds_radical_generator():
    # (x^2 - 1)^2 has double roots; the pruned kernel still holds x^2 - 1
    run = _run(("x^4 - 2*x^2 + 1",), ("x",), 4)
    P = pruned_matrix(run.outcome.y, 2)
    assert np.linalg.norm(P @ np.array([-1.0, 0.0, 1.0])) <= 1e-5 * np.linalg.norm(P, 2)
    assert run.report.s is not None
    assert np.allclose(np.sort(run.result.points[:, 0].real), [-1, 1], atol=1e-5)


@pytest.mark.slow
def test_three_variable_example_ranks():
    run = _run(tuple(CUBIC3), ("x1", "x2", "x3"), 3)
    assert run.report.full.ranks == (1, 7, 7, 7)
    assert run.report.pruned.ranks == (1, 4, 7, 7)
    assert (run.report.s, run.report.condition) == (3, Condition.FLAT_D)
    assert run.result.status == ExtractionStatus.RADICAL_CERTIFIED
    assert len(run.result.points) == 7
