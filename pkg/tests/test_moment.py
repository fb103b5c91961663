import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from realradical import linalg
from realradical.errors import (DegreeTooLarge, InconsistentEntries, NotFlat, OrderTooLarge,
                                OrderTooSmall)
from realradical.moment import (MomentSequence, assemble_moment_matrix, flat_extend, index_map,
                                localizing_equalities, localizing_matrix, moment_operator,
                                shift_sequence, zeta)
from realradical.polysys import Polynomial, add_exp, enumerate_monomials, num_monomials, parse_polynomial

from conftest import solved


def _brute_moment_matrix(y, s):
    monos = enumerate_monomials(y.n, s)
    M = np.empty((len(monos), len(monos)))
    for i, a in enumerate(monos):
        for j, b in enumerate(monos):
            M[i, j] = y[add_exp(a, b)]
    return M


@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_assembly_matches_double_loop(n, t, seed):
    vals = np.random.default_rng(seed).standard_normal(num_monomials(n, 2 * t))
    y = MomentSequence(n, t, vals)
    for s in range(t + 1):
        assert np.array_equal(assemble_moment_matrix(y, s), _brute_moment_matrix(y, s))


def test_assembly_examples():
    y = MomentSequence(1, 1, [1.0, 2.0, 4.0])
    M = assemble_moment_matrix(y, 1)
    assert np.array_equal(M, [[1, 2], [2, 4]])
    assert linalg.numerical_rank(linalg.svd(M).singular_values) == 1
    M = assemble_moment_matrix(MomentSequence.from_point([1, 2], 1), 1)
    assert np.allclose(np.diag(M), [1, 1, 4]) and np.linalg.matrix_rank(M) == 1
    with pytest.raises(OrderTooLarge):
        assemble_moment_matrix(y, 2)


def test_nested_blocks():
    y = MomentSequence(2, 3, np.arange(num_monomials(2, 6), dtype=float))
    M3 = assemble_moment_matrix(y, 3)
    for s in range(3):
        k = num_monomials(2, s)
        assert np.array_equal(M3[:k, :k], assemble_moment_matrix(y, s))


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.integers(1, 3))
def test_point_evaluation_is_rank_one(v, t):
    y = MomentSequence.from_point(v, t)
    z = zeta(v, t)
    assert np.abs(assemble_moment_matrix(y, t) - np.outer(z, z)).max() <= 1e-12 * max(1, np.abs(z).max() ** 2)


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.integers(0, 2**32 - 1))
def test_point_satisfies_equalities_iff_root(v, seed):
    rng = np.random.default_rng(seed)
    monos = enumerate_monomials(2, 2)
    h = Polynomial.from_vector(rng.integers(-3, 4, len(monos)).astype(float), monos)
    if h.is_zero() or h.degree < 1:
        return
    t = 2
    y = MomentSequence.from_point(v, t)
    hv = h(v)
    # the row for gamma = 0 reads h(v), so the residual is at least |h(v)|
    assert localizing_equalities(h, t).residual(y.values) >= abs(hv) * (1 - 1e-9)
    h0 = h - hv
    if h0.degree >= 1:
        assert localizing_equalities(h0, t).residual(y.values) <= 1e-9 * (1 + abs(hv)) * 50


def test_shift_sequence():
    y = MomentSequence(2, 1, np.arange(1.0, 7.0))
    c = Polynomial.constant(3.0, 2)
    assert np.allclose(shift_sequence(c, y), 3 * y.values)
    v = np.array([0.5, -2.0])
    yp = MomentSequence.from_point(v, 2)
    hy = shift_sequence(Polynomial.variable(0, 2), yp)
    monos = index_map(2, 3).monomials
    assert np.allclose(hy, [v[0] * np.prod(v ** np.array(a)) for a in monos])
    h = parse_polynomial("x1^2+x2^2", ["x1", "x2"])
    assert shift_sequence(h, y)[0] == y[(2, 0)] + y[(0, 2)]
    with pytest.raises(DegreeTooLarge):
        shift_sequence(Polynomial({(3, 0): 1.0}), y)


def test_localizing_equalities():
    eq = localizing_equalities(parse_polynomial("x1^2+x2^2", ["x1", "x2"]), 1)
    assert len(eq) == 1
    rows = list(eq.rows())
    coeffs, rhs = rows[0]
    assert coeffs == {(2, 0): 1.0, (0, 2): 1.0} and rhs == 0.0
    coeffs, _ = list(localizing_equalities(parse_polynomial("x-1", ["x"]), 1).rows())[0]
    assert coeffs == {(1,): 1.0, (0,): -1.0}
    h = parse_polynomial("x1^3+x2", ["x1", "x2"])
    assert len(localizing_equalities(h, 3)) == num_monomials(2, 2)
    with pytest.raises(OrderTooSmall):
        localizing_equalities(h, 1)


def test_localizing_matrix():
    v = [0.5, 0.2]
    y = MomentSequence.from_point(v, 2)
    one = Polynomial.constant(1.0, 2)
    assert np.allclose(localizing_matrix(one, y, 2), assemble_moment_matrix(y, 2))
    g = parse_polynomial("1 - x1^2", ["x1", "x2"])
    L = localizing_matrix(g, y, 1)
    assert linalg.min_eig(L) >= -1e-12 and np.linalg.matrix_rank(L, 1e-10) == 1
    bad = MomentSequence.from_point([2.0, 0.0], 2)
    assert linalg.min_eig(localizing_matrix(g, bad, 1)) < 0
    with pytest.raises(OrderTooSmall):
        localizing_matrix(g, y, 2)


def test_moment_operator_matches_assembly():
    y = MomentSequence(2, 2, np.random.default_rng(3).standard_normal(15))
    op = moment_operator(2, 2, 2)
    assert np.allclose((op @ y.values).reshape(6, 6), assemble_moment_matrix(y, 2))


def _random_measure(rng, n, k):
    pts = rng.uniform(-1.5, 1.5, size=(k, n))
    w = rng.uniform(0.2, 1.0, size=k)
    return pts, w / w.sum()


@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.integers(1, 4))
def test_kernel_ideal_property(seed, n, k):
    """``M f = 0`` implies ``M (f g) = 0`` when ``deg(fg) <= t - 1``."""
    rng = np.random.default_rng(seed)
    pts, w = _random_measure(rng, n, k)
    t = 3
    y = MomentSequence.from_measure(pts, w, t)
    M = assemble_moment_matrix(y, t)
    res = linalg.svd(M)
    r = linalg.numerical_rank(res.singular_values)
    monos = enumerate_monomials(n, t)
    scale = np.abs(M).max()
    for col in res.V[:, r:].T:
        f = Polynomial.from_vector(col, monos, tol=1e-12)
        if f.degree > 1:
            continue
        eps = np.linalg.norm(M @ col)
        for i in range(n):
            fg = (f * Polynomial.variable(i, n)).to_vector(monos)
            # constant c covers the conditioning of the kernel split
            assert np.linalg.norm(M @ fg) <= 1e3 * eps + 1e-8 * scale


def test_flat_extend_point():
    v = [0.3, -1.2]
    y = MomentSequence.from_point(v, 2)
    ext = flat_extend(y, 2)
    assert np.allclose(ext.values, MomentSequence.from_point(v, 3).values, atol=1e-10)


def test_flat_extend_two_atoms():
    y = MomentSequence.from_measure([[2.0], [3.0]], [0.5, 0.5], 2)
    ext = flat_extend(y, 2)
    exact = [0.5 * (2 ** k + 3 ** k) for k in range(7)]
    assert np.allclose(ext.values, exact, rtol=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 5))
def test_flat_extend_reproduces_measure(seed, n, k):
    rng = np.random.default_rng(seed)
    pts, w = _random_measure(rng, n, k)
    # choose s so that M_{s-1} already has full rank k
    s = next(s for s in range(1, 8) if num_monomials(n, s - 1) >= k)
    y = MomentSequence.from_measure(pts, w, s)
    Ms = assemble_moment_matrix(y, s)
    ranks = [linalg.numerical_rank(linalg.svd(Ms[:m, :m]).singular_values)
             for m in (num_monomials(n, s - 1), Ms.shape[0])]
    if ranks[0] != k or ranks[1] != k:
        return          # nearly coincident atoms: rank detection is not the point here
    ext = flat_extend(y, s)
    truth = MomentSequence.from_measure(pts, w, s + 1).values
    assert np.abs(ext.values - truth).max() <= 1e-8 * max(1.0, np.abs(truth).max())


def test_flat_extend_errors():
    y = MomentSequence.from_measure([[0.0], [1.0], [2.0]], [1 / 3] * 3, 2)
    with pytest.raises(NotFlat):
        flat_extend(y, 2)
    with pytest.raises(OrderTooSmall):
        flat_extend(y, 0)
    fake = MomentSequence(1, 1, [1.0, 1.0, 1.0 + 1e-3])
    with pytest.raises((NotFlat, InconsistentEntries)):
        flat_extend(fake, 1, tol=1e-12)


def test_flat_extend_cox3_solution():
    _, out = solved("cox3", 4)
    ext = flat_extend(out.y.truncate(2), 2)
    M = assemble_moment_matrix(ext, 3)
    assert linalg.numerical_rank(linalg.svd(M).singular_values) == 2


def test_convexity_of_feasible_set(rng):
    from realradical.sdp import build_problem
    from conftest import system
    sysm = system("twopoint")
    prob = build_problem(sysm, 2)
    y1 = MomentSequence.from_point([1, 1], 2).values
    y2 = MomentSequence.from_point([2, 2], 2).values
    for th in rng.uniform(0, 1, 5):
        y = th * y1 + (1 - th) * y2
        res, worst = prob.violation(y)
        assert res <= 1e-12 and worst >= -1e-9
