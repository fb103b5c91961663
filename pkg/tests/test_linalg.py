import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from realradical import linalg
from realradical.errors import NonFinite, NotPositiveDefinite, NotSymmetric, UnsortedInput


def test_svd_small_examples():
    assert np.allclose(linalg.svd(np.eye(2)).singular_values, [1, 1])
    assert np.allclose(linalg.svd(np.zeros((2, 2))).singular_values, [0, 0])


def test_svd_rejects_nonfinite():
    with pytest.raises(NonFinite):
        linalg.svd(np.array([[1.0, np.nan]]))


@settings(max_examples=1000)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_svd_invariants(m, n, seed):
    A = np.random.default_rng(seed).standard_normal((m, n)) * 10
    res = linalg.svd(A)
    s = res.singular_values
    assert np.abs(res.reconstruct() - A).max() <= 1e-10 * (1 + np.abs(A).max())
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    k = len(s)
    assert np.abs(res.U.T @ res.U - np.eye(k)).max() <= 1e-10
    assert np.abs(res.V.T @ res.V - np.eye(k)).max() <= 1e-10


@pytest.mark.parametrize("s,r", [((3, 2, 1e-12), 2), ((1, 0.9, 5e-4), 2), ((1, 0.5, 0.4), 3),
                                 ((0, 0), 0), ((1e-9,), 0)])
def test_numerical_rank_examples(s, r):
    assert linalg.numerical_rank(s) == r


def test_numerical_rank_rejects_unsorted():
    with pytest.raises(UnsortedInput):
        linalg.numerical_rank([1, 2])


def test_numerical_rank_difference_mode_is_scale_dependent():
    s = np.array([10.0, 5.0, 4.0])
    assert linalg.numerical_rank(s, gap_mode="difference") == 1
    assert linalg.numerical_rank(s / 1e4, gap_mode="difference") == 3


sv = arrays(float, st.integers(1, 12), elements=st.floats(0, 1e3)).map(lambda a: np.sort(a)[::-1])


@given(sv, st.floats(1e-12, 1.0), st.floats(1e-12, 1.0))
def test_numerical_rank_monotone_in_zero_tol(s, z1, z2):
    lo, hi = sorted((z1, z2))
    assert linalg.numerical_rank(s, zero_tol=hi) <= linalg.numerical_rank(s, zero_tol=lo)


def test_eig_nonsymmetric_examples():
    comp = np.array([[0.0, -6.0], [1.0, 5.0]])   # t^2 - 5t + 6
    assert np.allclose(np.sort(linalg.eig_nonsymmetric(comp).eigenvalues.real), [2, 3])
    rot = linalg.eig_nonsymmetric(np.array([[0.0, -1.0], [1.0, 0.0]])).eigenvalues
    assert np.allclose(sorted(rot, key=lambda z: z.imag), [-1j, 1j])
    X = np.array([[0.0, 0.0], [1.0, 1.0]])       # multiplication by x1 on {1, x1}
    assert np.allclose(np.sort(linalg.eig_nonsymmetric(X).eigenvalues.real), [0, 1])


def _bisect_roots(c):
    """Real roots of x^3 + c2 x^2 + c1 x + c0 by sign-change bracketing and bisection."""
    f = np.poly1d([1.0, *c[::-1]])
    bound = 1 + max(abs(x) for x in c)
    grid = np.linspace(-bound, bound, 20001)
    vals = f(grid)
    roots = []
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            for _ in range(200):
                m = 0.5 * (a + b)
                if f(a) * f(m) <= 0:
                    b = m
                else:
                    a = m
            roots.append(0.5 * (a + b))
    return roots


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3, unique=True))
def test_eig_companion_matches_bisection(r):
    r = np.array(sorted(r))
    if np.min(np.diff(r)) < 1e-2:
        return
    c = np.poly(r)[::-1][:3]            # c0, c1, c2 of the monic cubic
    C = np.zeros((3, 3))
    C[1:, :2] = np.eye(2)
    C[:, 2] = -c
    ev = np.sort(linalg.eig_nonsymmetric(C).eigenvalues.real)
    assert np.allclose(ev, sorted(_bisect_roots(c)), atol=1e-7)


@given(st.integers(0, 2**32 - 1), st.integers(2, 9))
def test_eig_pairs_and_conjugation(seed, n):
    A = np.random.default_rng(seed).standard_normal((n, n))
    res = linalg.eig_nonsymmetric(A)
    for lam, w in zip(res.eigenvalues, res.eigenvectors.T):
        assert np.linalg.norm(A @ w - lam * w) <= 1e-8 * np.abs(A).max() * np.linalg.norm(w) * n
    ev = res.eigenvalues
    assert max(np.min(np.abs(ev - np.conj(z))) for z in ev) <= 1e-9


def test_eig_symmetric():
    lam, _ = linalg.eig_symmetric(np.diag([1.0, 2.0]))
    assert np.allclose(lam, [2, 1])
    lam, _ = linalg.eig_symmetric(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(lam, [1, -1])
    A = np.random.default_rng(0).standard_normal((6, 6))
    A = A + A.T
    lam, Q = linalg.eig_symmetric(A)
    assert np.abs(Q @ np.diag(lam) @ Q.T - A).max() <= 1e-8
    with pytest.raises(NotSymmetric):
        linalg.eig_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_solve_spd():
    b = np.array([1.0, 2.0])
    assert np.allclose(linalg.solve_spd(np.eye(2), b), b)
    assert np.allclose(linalg.solve_spd(np.array([[4.0]]), np.array([8.0])), [2.0])
    G = np.random.default_rng(1).standard_normal((8, 8))
    A = G @ G.T + 0.1 * np.eye(8)
    b = np.arange(8.0)
    x = linalg.solve_spd(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-8 * np.linalg.norm(b)
    with pytest.raises(NotPositiveDefinite):
        linalg.solve_spd(-np.eye(2), b)


def test_orth_complement():
    A = np.array([[1.0, 1.0, 0.0]])
    Z, r = linalg.orth_complement(A)
    assert r == 1 and Z.shape == (3, 2)
    assert np.abs(A @ Z).max() < 1e-12
