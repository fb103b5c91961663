"""Truncated moment matrices, shifted sequences and flat extensions.

Sequences are indexed by ``T_{n,2t}`` in the index order of
:func:`realradical.polysys.enumerate_monomials`, so ``M_{s-1}(y)`` is always the
leading principal block of ``M_s(y)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import DegreeTooLarge, InconsistentEntries, NotFlat, OrderTooLarge, OrderTooSmall
from .polysys import Polynomial, add_exp, enumerate_monomials, half_degree, num_monomials, unit


class MomentIndexMap:
    """Positions of the exponents of ``T_{n,t}``."""

    def __init__(self, n: int, t: int):
        self.n = n
        self.t = t
        self.monomials = enumerate_monomials(n, t)
        self.lookup = {m: i for i, m in enumerate(self.monomials)}

    def __len__(self):
        return len(self.monomials)

    def __getitem__(self, alpha):
        return self.lookup[tuple(alpha)]

    def __contains__(self, alpha):
        return tuple(alpha) in self.lookup


@lru_cache(maxsize=None)
def index_map(n: int, t: int) -> MomentIndexMap:
    return MomentIndexMap(n, t)


@lru_cache(maxsize=None)
def _sum_index(n: int, s: int, t: int) -> np.ndarray:
    """``idx[i, j]`` = position of ``alpha_i + alpha_j`` inside ``T_{n,t}``."""
    rows = index_map(n, s).monomials
    look = index_map(n, t).lookup
    idx = np.empty((len(rows), len(rows)), dtype=np.intp)
    for i, a in enumerate(rows):
        for j in range(i, len(rows)):
            idx[i, j] = idx[j, i] = look[add_exp(a, rows[j])]
    idx.setflags(write=False)
    return idx


@dataclass(frozen=True)
class MomentSequence:
    """Real truncated sequence ``y = (y_alpha)`` for ``|alpha| <= 2t``."""

    n: int
    t: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (num_monomials(self.n, 2 * self.t),):
            raise ValueError(
                f"expected {num_monomials(self.n, 2 * self.t)} values for n={self.n}, t={self.t}")
        object.__setattr__(self, "values", vals)

    @property
    def index(self) -> MomentIndexMap:
        return index_map(self.n, 2 * self.t)

    def __getitem__(self, alpha) -> float:
        return float(self.values[self.index[alpha]])

    def truncate(self, t: int) -> "MomentSequence":
        if t > self.t:
            raise OrderTooLarge(f"cannot truncate order {self.t} to {t}")
        return MomentSequence(self.n, t, self.values[: num_monomials(self.n, 2 * t)].copy())

    @classmethod
    def from_measure(cls, points, weights, t: int) -> "MomentSequence":
        """Moments ``sum_v w_v v^alpha`` of a finitely supported real measure."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float)
        n = points.shape[1]
        monos = np.array(index_map(n, 2 * t).monomials)
        vals = np.prod(points[:, None, :] ** monos[None, :, :], axis=2)
        return cls(n, t, weights @ vals)

    @classmethod
    def from_point(cls, v, t: int) -> "MomentSequence":
        """The evaluation sequence ``zeta_{2t,v}``."""
        return cls.from_measure([v], [1.0], t)


def zeta(v, t: int) -> np.ndarray:
    """Monomial vector ``(v^alpha)_{|alpha|<=t}`` (real or complex point)."""
    v = np.asarray(v)
    monos = np.array(index_map(len(v), t).monomials)
    return np.prod(v[None, :] ** monos, axis=1)


def assemble_moment_matrix(y: MomentSequence, s: int) -> np.ndarray:
    """``M_s(y)`` with entry ``(alpha, beta) = y_{alpha+beta}``."""
    if s > y.t:
        raise OrderTooLarge(f"order {s} exceeds sequence order {y.t}")
    return y.values[_sum_index(y.n, s, 2 * y.t)]


def shift_sequence(h: Polynomial, y: MomentSequence) -> np.ndarray:
    """``(hy)_alpha = sum_beta h_beta y_{alpha+beta}`` for ``|alpha| <= 2t - deg h``."""
    if h.degree > 2 * y.t:
        raise DegreeTooLarge(f"deg h = {h.degree} > 2t = {2 * y.t}")
    top = 2 * y.t - max(h.degree, 0)
    look = y.index.lookup
    out = np.zeros(num_monomials(y.n, top))
    for i, a in enumerate(index_map(y.n, top).monomials):
        out[i] = sum(c * y.values[look[add_exp(a, b)]] for b, c in h.items())
    return out


@dataclass(frozen=True)
class LinearConstraintSystem:
    """Equality rows ``matrix @ y = rhs`` over the exponents ``monomials``."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    monomials: tuple

    def rows(self):
        """Yield ``({exponent: coefficient}, rhs)`` pairs."""
        m = self.matrix.tocsr()
        for r in range(m.shape[0]):
            lo, hi = m.indptr[r], m.indptr[r + 1]
            yield ({self.monomials[j]: float(c) for j, c in zip(m.indices[lo:hi], m.data[lo:hi])},
                   float(self.rhs[r]))

    def __len__(self):
        return self.matrix.shape[0]

    def residual(self, values) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.abs(self.matrix @ np.asarray(values) - self.rhs).max())


def localizing_equalities(h: Polynomial, t: int) -> LinearConstraintSystem:
    """Rows of ``M_{t-d_h}(hy) = 0``, one per exponent sum ``gamma``."""
    dh = half_degree(h)
    if t < dh:
        raise OrderTooSmall(f"t = {t} < half degree {dh}")
    n = h.n
    look = index_map(n, 2 * t).lookup
    gammas = index_map(n, 2 * (t - dh)).monomials
    rows, cols, data = [], [], []
    for r, g in enumerate(gammas):
        for b, c in h.items():
            rows.append(r)
            cols.append(look[add_exp(g, b)])
            data.append(c)
    N = num_monomials(n, 2 * t)
    mat = sp.csr_matrix((data, (rows, cols)), shape=(len(gammas), N))
    return LinearConstraintSystem(mat, np.zeros(len(gammas)), tuple(index_map(n, 2 * t).monomials))


def localizing_matrix(h: Polynomial, y: MomentSequence, s: int) -> np.ndarray:
    """``M_s(hy)`` with entry ``(alpha, beta) = (hy)_{alpha+beta}``."""
    if s + half_degree(h) > y.t:
        raise OrderTooSmall(f"need s + d_h <= t, got {s} + {half_degree(h)} > {y.t}")
    hy = shift_sequence(h, y)
    top = 2 * y.t - h.degree
    return hy[_sum_index(y.n, s, top)]


def moment_operator(n: int, s: int, t: int) -> sp.csr_matrix:
    """Sparse map ``y -> vec(M_s(y))`` for sequences of order ``t``."""
    idx = _sum_index(n, s, 2 * t).ravel()
    N = num_monomials(n, 2 * t)
    return sp.csr_matrix((np.ones(idx.size), (np.arange(idx.size), idx)), shape=(idx.size, N))


def localizing_operator(h: Polynomial, s: int, t: int) -> sp.csr_matrix:
    """Sparse map ``y -> vec(M_s(hy))`` for sequences of order ``t``."""
    if s + half_degree(h) > t:
        raise OrderTooSmall(f"need s + d_h <= t, got {s} + {half_degree(h)} > {t}")
    n = h.n
    look = index_map(n, 2 * t).lookup
    rowsmon = index_map(n, s).monomials
    dim = len(rowsmon)
    rows, cols, data = [], [], []
    for i, a in enumerate(rowsmon):
        for j, b in enumerate(rowsmon):
            ab = add_exp(a, b)
            for g, c in h.items():
                rows.append(i * dim + j)
                cols.append(look[add_exp(ab, g)])
                data.append(c)
    N = num_monomials(n, 2 * t)
    return sp.csr_matrix((data, (rows, cols)), shape=(dim * dim, N))


def _column_coefficients(Ms: np.ndarray, n_lower: int, rank: int) -> np.ndarray:
    """Least-squares coefficients expressing every column of ``Ms`` through its
    first ``n_lower`` columns, truncated to ``rank`` singular directions."""
    A = Ms[:, :n_lower]
    res = linalg.svd(A)
    U, s, V = res.U[:, :rank], res.singular_values[:rank], res.V[:, :rank]
    return V @ ((U.T @ Ms) / s[:, None])


def flat_extend(y: MomentSequence, s: int, *, tol: float = 1e-6,
                zero_tol: float = linalg.SVD_ZERO_TOL,
                gap_ratio: float = linalg.GAP_RATIO) -> MomentSequence:
    """Extend a flat ``M_s(y)`` to ``M_{s+1}`` without increasing the rank.

    Each new column ``x_i x^beta`` is built from the linear relation that
    expresses column ``beta`` through the columns of degree < s.  When several
    splittings produce the same moment the candidates are averaged, and
    :class:`InconsistentEntries` is raised if they disagree by more than ``tol``
    (relative to ``max(1, |value|)``).
    """
    if s < 1:
        raise OrderTooSmall("flat extension needs s >= 1")
    if s > y.t:
        raise OrderTooLarge(f"order {s} exceeds sequence order {y.t}")
    n = y.n
    Ms = assemble_moment_matrix(y, s)
    if linalg.min_eig(Ms) < -tol * max(1.0, np.abs(Ms).max()):
        raise NotFlat("M_s(y) is not positive semidefinite")
    n_lower = num_monomials(n, s - 1)
    r_s = linalg.numerical_rank(linalg.svd(Ms).singular_values, zero_tol, gap_ratio)
    r_lower = linalg.numerical_rank(
        linalg.svd(Ms[:n_lower, :n_lower]).singular_values, zero_tol, gap_ratio)
    if r_s != r_lower:
        raise NotFlat(f"rank M_s = {r_s} but rank M_(s-1) = {r_lower}")

    rows_s = index_map(n, s).monomials
    pos_s = index_map(n, s).lookup
    lam = _column_coefficients(Ms, n_lower, r_s)  # column j of Ms = Ms[:, :n_lower] @ lam[:, j]
    lower = rows_s[:n_lower]

    # degree-(s+1) columns, rows indexed by T_{n,s}
    new_monos = [m for m in index_map(n, s + 1).monomials if sum(m) == s + 1]
    cand: dict = {}

    def push(alpha, value):
        cand.setdefault(alpha, []).append(value)

    new_cols = {}
    for g in new_monos:
        i = next(k for k in range(n) if g[k] > 0)
        beta = tuple(g[k] - (k == i) for k in range(n))
        coeffs = lam[:, pos_s[beta]]
        shifted = [pos_s[add_exp(a, unit(n, i))] for a in lower]
        col = Ms[:, shifted] @ coeffs
        new_cols[g] = col
        for r, d in enumerate(rows_s):
            push(add_exp(d, g), col[r])
    # corner block between two degree-(s+1) monomials
    for g in new_monos:
        i = next(k for k in range(n) if g[k] > 0)
        beta = tuple(g[k] - (k == i) for k in range(n))
        coeffs = lam[:, pos_s[beta]]
        for g2 in new_monos:
            vals = np.array([new_cols[g2][pos_s[add_exp(a, unit(n, i))]] for a in lower])
            push(add_exp(g, g2), float(vals @ coeffs))

    out_index = index_map(n, 2 * (s + 1))
    values = np.empty(len(out_index))
    known = num_monomials(n, 2 * s)
    values[:known] = y.values[:known]
    worst = 0.0
    for alpha, pos in out_index.lookup.items():
        vals = cand.get(alpha)
        if vals is None:
            continue
        mean = float(np.mean(vals))
        spread = max(abs(v - mean) for v in vals)
        if pos < known:
            spread = max(spread, abs(values[pos] - mean))
        else:
            values[pos] = mean
        worst = max(worst, spread / max(1.0, abs(mean)))
    if worst > tol:
        raise InconsistentEntries(f"alternative derivations differ by {worst:.3g}")
    return MomentSequence(n, s + 1, values)
