"""Rank analysis, quotient bases, multiplication matrices and root extraction.

All routines take plain moment matrices whose rows and columns follow the
index order of ``enumerate_monomials(n, k)``; the complex pipeline reuses them
on pruned matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .errors import (BasisIncomplete, DegenerateSpectrum, InconsistentEntries, NonCommuting,
                     NotFlat, NotOrderIdeal, NotStandardMonomialBasis, SingularBasisBlock)
from .moment import MomentSequence, assemble_moment_matrix, flat_extend, index_map
from .polysys import (MonomialOrder, PolySystem, Polynomial, add_exp, divides, enumerate_monomials,
                      evaluate, num_monomials, unit)


class Condition(str, Enum):
    FLAT_D = "FlatD"
    FLAT_ONE_HIGH = "FlatOneHighOrder"
    FLAT_ONE_PARTIAL = "FlatOnePartial"
    PREBASIS_ONLY = "PrebasisOnly"
    NONE = "None"


FLAT_CONDITIONS = (Condition.FLAT_D, Condition.FLAT_ONE_HIGH, Condition.FLAT_ONE_PARTIAL)
CERTIFYING = (Condition.FLAT_D, Condition.FLAT_ONE_HIGH)


class BasisKind(str, Enum):
    SVD = "SvdPolynomial"
    GREEDY = "GreedyMonomial"
    STANDARD = "StandardMonomials"


class ExtractionStatus(str, Enum):
    RADICAL_CERTIFIED = "RadicalCertified"
    SUPERSET_RETURNED = "SupersetReturned"


@dataclass(frozen=True)
class Tolerances:
    zero_tol: float = linalg.SVD_ZERO_TOL
    gap_ratio: float = linalg.GAP_RATIO
    comm_tol: float = 1e-2
    accept_tol: float = 1e-4
    sep_tol: float = 1e-6

    def __post_init__(self):
        for name in ("zero_tol", "gap_ratio", "comm_tol", "accept_tol", "sep_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# ---------------------------------------------------------------- ranks

@dataclass
class RankReport:
    ranks: tuple
    singular_values: list
    s: int | None = None
    condition: Condition = Condition.NONE
    workable: list = field(default_factory=list)   # every (s, condition) that holds

    @property
    def t(self) -> int:
        return len(self.ranks) - 1


def rank_report_from_matrices(mats: Sequence[np.ndarray], zero_tol=linalg.SVD_ZERO_TOL,
                              gap_ratio=linalg.GAP_RATIO) -> RankReport:
    svs = [linalg.svd(M).singular_values for M in mats]
    ranks = tuple(linalg.numerical_rank(s, zero_tol, gap_ratio) for s in svs)
    return RankReport(ranks, svs)


def rank_sequence(y: MomentSequence, t: int | None = None, zero_tol=linalg.SVD_ZERO_TOL,
                  gap_ratio=linalg.GAP_RATIO) -> RankReport:
    """Numerical ranks of ``M_0(y), ..., M_t(y)``."""
    t = y.t if t is None else t
    return rank_report_from_matrices([assemble_moment_matrix(y, k) for k in range(t + 1)],
                                     zero_tol, gap_ratio)


def flat_conditions(ranks: Sequence[int], d: int) -> list:
    """All ``(s, condition)`` pairs that hold, strongest class first, then smallest s."""
    t = len(ranks) - 1
    out = [(s, Condition.FLAT_D) for s in range(max(d, 1), t + 1) if ranks[s] == ranks[s - d]]
    out += [(s, Condition.FLAT_ONE_HIGH) for s in range(max(2 * d, 1), t + 1)
            if ranks[s] == ranks[s - 1]]
    out += [(s, Condition.FLAT_ONE_PARTIAL) for s in range(1, min(2 * d, t + 1))
            if ranks[s] == ranks[s - 1]]
    return out


def certify_condition(report: RankReport, d: int, t: int | None = None) -> tuple:
    """Strongest available condition and its order ``s``.

    With no flat pair the answer is ``(t, PrebasisOnly)``: the caller still has
    to probe for a commuting prebasis.
    """
    ranks = report.ranks if t is None else report.ranks[: t + 1]
    t = len(ranks) - 1
    found = flat_conditions(ranks, d)
    report.workable = found
    if found:
        s, cond = found[0]
    elif t >= 1:
        s, cond = t, Condition.PREBASIS_ONLY
    else:
        s, cond = None, Condition.NONE
    report.s, report.condition = s, cond
    return s, cond


# ---------------------------------------------------------------- bases

@dataclass
class QuotientBasis:
    kind: BasisKind
    n: int
    degree: int                  # elements live in T_{n, degree}
    elements: list               # exponents, or coefficient columns (SVD kind)
    order_ideal: bool = False
    border: list = field(default_factory=list)
    singular_values: np.ndarray | None = None
    coefficients: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def is_monomial(self) -> bool:
        return self.kind != BasisKind.SVD

    def polynomials(self) -> list:
        if self.is_monomial:
            return [Polynomial({b: 1.0}, self.n) for b in self.elements]
        monos = enumerate_monomials(self.n, self.degree)
        return [Polynomial.from_vector(c, monos) for c in self.coefficients.T]


def is_order_ideal(B: Sequence[tuple]) -> bool:
    members = set(B)
    for b in B:
        for i, e in enumerate(b):
            if e and tuple(x - (k == i) for k, x in enumerate(b)) not in members:
                return False
    return True


def border_of(B: Sequence[tuple], n: int) -> list:
    """``(x_1 B u ... u x_n B) minus B`` in index order."""
    members = set(B)
    out = {add_exp(b, unit(n, i)) for b in B for i in range(n)} - members
    pos = index_map(n, max(sum(c) for c in out)).lookup if out else {}
    return sorted(out, key=lambda c: pos[c])


def _monomial_basis(kind, B, n, degree) -> QuotientBasis:
    pos = index_map(n, degree).lookup
    B = sorted(B, key=lambda b: pos[b])
    return QuotientBasis(kind, n, degree, B, is_order_ideal(B), border_of(B, n))


def _deg_of(M: np.ndarray, n: int) -> int:
    k = 0
    while num_monomials(n, k) < M.shape[0]:
        k += 1
    if num_monomials(n, k) != M.shape[0]:
        raise ValueError(f"matrix of order {M.shape[0]} is not indexed by some T_(n,k), n={n}")
    return k


def svd_basis(M: np.ndarray, n: int, rank: int | None = None, zero_tol=linalg.SVD_ZERO_TOL,
              gap_ratio=linalg.GAP_RATIO) -> QuotientBasis:
    """Leading left singular vectors of ``M_{s-1}(y)`` as polynomial basis."""
    res = linalg.svd(M)
    r = linalg.numerical_rank(res.singular_values, zero_tol, gap_ratio) if rank is None else rank
    U = res.U[:, :r]
    return QuotientBasis(BasisKind.SVD, n, _deg_of(M, n), [U[:, i] for i in range(r)],
                         singular_values=res.singular_values[:r], coefficients=U)


def _independent(M: np.ndarray, cols: list, zero_tol, gap_ratio) -> bool:
    sv = linalg.svd(M[:, cols]).singular_values
    return linalg.numerical_rank(sv, zero_tol, gap_ratio) == len(cols)


def greedy_monomial_basis(M: np.ndarray, n: int, order: MonomialOrder | None = None,
                          rank: int | None = None, zero_tol=linalg.SVD_ZERO_TOL,
                          gap_ratio=linalg.GAP_RATIO) -> QuotientBasis:
    """Keep each scanned monomial whose column is independent of those kept.

    Without ``order`` the scan follows the index order 1, x1, x2, ...
    """
    deg = _deg_of(M, n)
    if rank is None:
        rank = linalg.numerical_rank(linalg.svd(M).singular_values, zero_tol, gap_ratio)
    pos = index_map(n, deg).lookup
    chosen = []
    for m in enumerate_monomials(n, deg, order):
        if len(chosen) == rank:
            break
        if _independent(M, [pos[b] for b in chosen] + [pos[m]], zero_tol, gap_ratio):
            chosen.append(m)
    if len(chosen) < rank:
        raise BasisIncomplete(f"found {len(chosen)} independent monomials, rank is {rank}")
    return _monomial_basis(BasisKind.GREEDY, chosen, n, deg)


def greedy_sieve(oracle: Callable[[list], bool], order: MonomialOrder, s: int, n: int) -> list:
    """Scan ``T_{n,s}`` ascending in ``order``; a dependent monomial removes all its multiples."""
    B: list = []
    rejected: list = []
    for m in enumerate_monomials(n, s, order):
        if any(divides(r, m) for r in rejected):
            continue
        if oracle(B + [m]):
            B.append(m)
        else:
            rejected.append(m)
    return B


def moment_oracle(M: np.ndarray, n: int, zero_tol=linalg.SVD_ZERO_TOL,
                  gap_ratio=linalg.GAP_RATIO) -> Callable[[list], bool]:
    """Independence in the quotient = independent columns of a flat moment matrix."""
    pos = index_map(n, _deg_of(M, n)).lookup
    return lambda T: _independent(M, [pos[m] for m in T], zero_tol, gap_ratio)


def vandermonde_oracle(points, tol: float = 1e-9) -> Callable[[list], bool]:
    """Independence in ``R[x]/I(V)`` for a known finite point set ``V``."""
    pts = np.asarray(points, dtype=complex)

    def oracle(T):
        V = np.array([[np.prod(p ** np.array(m)) for m in T] for p in pts])
        sv = np.linalg.svd(V, compute_uv=False)
        return int(np.sum(sv > tol * max(1.0, sv[0]))) == len(T)

    return oracle


def sieve_basis(y: MomentSequence, s: int, order: MonomialOrder, tol: Tolerances = Tolerances(),
                max_depth: int = 5) -> tuple:
    """Standard monomials for ``order`` from a flat ``M_s(y)``.

    Returns ``(basis, sequence)`` where ``sequence`` is ``y`` (graded orders)
    or a flat extension deep enough to build multiplication matrices.
    """
    n = y.n
    seq = y.truncate(s)
    M_lower = assemble_moment_matrix(seq, s - 1)
    if order.graded:
        B = greedy_sieve(moment_oracle(M_lower, n, tol.zero_tol, tol.gap_ratio), order, s - 1, n)
        return _monomial_basis(BasisKind.STANDARD, B, n, s - 1), seq
    k = s - 1
    B = greedy_sieve(moment_oracle(M_lower, n, tol.zero_tol, tol.gap_ratio), order, k, n)
    while True:
        try:
            seq = flat_extend(seq, seq.t, tol=1e-4, zero_tol=tol.zero_tol, gap_ratio=tol.gap_ratio)
        except (NotFlat, InconsistentEntries):
            if seq.t - s >= 1:
                break
            raise
        Mk = assemble_moment_matrix(seq, k + 1)
        B_next = greedy_sieve(moment_oracle(Mk, n, tol.zero_tol, tol.gap_ratio), order, k + 1, n)
        if set(B_next) == set(B) or seq.t >= s + max_depth:
            B = B_next
            k += 1
            break
        B, k = B_next, k + 1
    deg = max(max(sum(b) for b in B), 0)
    while seq.t < deg + 1:
        seq = flat_extend(seq, seq.t, tol=1e-4, zero_tol=tol.zero_tol, gap_ratio=tol.gap_ratio)
    return _monomial_basis(BasisKind.STANDARD, B, n, deg), seq


# ---------------------------------------------------------------- multiplication

@dataclass
class MultiplicationSystem:
    matrices: list
    comm_error: float
    basis: QuotientBasis


def commutator_error(mats: Sequence[np.ndarray]) -> float:
    err = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            err = max(err, float(np.abs(mats[i] @ mats[j] - mats[j] @ mats[i]).max(initial=0.0)))
    return err


def multiplication_matrices(Ms: np.ndarray, basis: QuotientBasis) -> MultiplicationSystem:
    """``X_i`` with column ``j`` = coordinates of ``x_i b_j`` in the basis."""
    n = basis.n
    s = _deg_of(Ms, n)
    if s < basis.degree + 1:
        raise ValueError(f"need M_s with s >= {basis.degree + 1}, got s = {s}")
    pos = index_map(n, s).lookup
    mats = []
    if basis.is_monomial:
        rows = [pos[b] for b in basis.elements]
        MB = Ms[np.ix_(rows, rows)]
        sv = linalg.svd(MB).singular_values
        if sv.size and sv[-1] <= 1e-12 * max(1.0, sv[0]):
            raise SingularBasisBlock("basis-indexed block of M_s is singular")
        for i in range(n):
            cols = [pos[add_exp(b, unit(n, i))] for b in basis.elements]
            mats.append(np.linalg.solve(MB, Ms[np.ix_(rows, cols)]))
    else:
        low = enumerate_monomials(n, basis.degree)
        U = basis.coefficients
        sig = basis.singular_values
        if sig[-1] <= 0:
            raise SingularBasisBlock("zero singular value in SVD basis")
        rows = list(range(len(low)))
        for i in range(n):
            cols = [pos[add_exp(b, unit(n, i))] for b in low]
            P = Ms[np.ix_(rows, cols)]
            mats.append((U.T @ P @ U) / sig[:, None])
    return MultiplicationSystem(mats, commutator_error(mats), basis)


def extract_roots(ms: MultiplicationSystem, seed: int = 0, comm_tol: float = 1e-2,
                  sep_tol: float = 1e-6, retries: int = 5) -> np.ndarray:
    """Common eigenvectors of the ``X_i^T`` give the points, one per row."""
    if ms.comm_error > comm_tol:
        raise NonCommuting(f"commutativity error {ms.comm_error:.3g} > {comm_tol:g}",
                           ms.comm_error)
    rng = np.random.default_rng(seed)
    n = len(ms.matrices)
    r = ms.matrices[0].shape[0]
    for _ in range(retries):
        a = rng.normal(size=n)
        a /= np.linalg.norm(a)
        Xh = sum(ai * X for ai, X in zip(a, ms.matrices))
        eig = linalg.eig_nonsymmetric(Xh.T)
        lam = eig.eigenvalues
        gaps = np.abs(lam[:, None] - lam[None, :])
        np.fill_diagonal(gaps, np.inf)
        if r == 1 or gaps.min() >= sep_tol:
            W = eig.eigenvectors
            norms = np.einsum("ij,ij->j", W.conj(), W)
            pts = np.empty((r, n), dtype=complex)
            for i, X in enumerate(ms.matrices):
                pts[:, i] = np.einsum("ij,ik,kj->j", W.conj(), X.T, W) / norms
            return pts
    raise DegenerateSpectrum(f"eigenvalues not separated by {sep_tol:g} after {retries} tries")


# ---------------------------------------------------------------- border / Groebner

@dataclass(frozen=True)
class BorderPolynomial:
    marked: tuple
    poly: Polynomial


def border_basis(ms: MultiplicationSystem, basis: QuotientBasis | None = None) -> list:
    """One marked polynomial ``c - sum a_k b_k`` per border monomial ``c``."""
    basis = basis or ms.basis
    if not basis.is_monomial or not basis.order_ideal:
        raise NotOrderIdeal("border basis needs a monomial order-ideal basis")
    n = basis.n
    where = {}
    for i in range(n):
        for j, b in enumerate(basis.elements):
            where.setdefault(add_exp(b, unit(n, i)), (i, j))
    out = []
    for c in basis.border:
        i, j = where[c]
        terms = {c: 1.0}
        for k, b in enumerate(basis.elements):
            coef = -float(ms.matrices[i][k, j])
            if coef != 0.0:
                terms[b] = terms.get(b, 0.0) + coef
        out.append(BorderPolynomial(c, Polynomial(terms, n)))
    return out


def corners(B: Sequence[tuple], n: int) -> list:
    """Minimal monomials (under division) outside the order ideal ``B``."""
    bd = border_of(B, n)
    return [c for c in bd if not any(o != c and divides(o, c) for o in bd)]


def groebner_from_border(border: Sequence[BorderPolynomial], basis: QuotientBasis,
                         order: MonomialOrder, coef_tol: float = 1e-8) -> list:
    """Border polynomials marked by the corners of ``B``; each corner must lead."""
    if not basis.is_monomial or not basis.order_ideal:
        raise NotStandardMonomialBasis("need a monomial order-ideal basis")
    cs = set(corners(basis.elements, basis.n))
    out = []
    for g in border:
        if g.marked not in cs:
            continue
        for m, c in g.poly.items():
            if m != g.marked and abs(c) > coef_tol and order.key(m) > order.key(g.marked):
                raise NotStandardMonomialBasis(
                    f"corner {g.marked} is not the leading monomial of its border polynomial")
        out.append(g)
    return out


# ---------------------------------------------------------------- verification

def verify_and_filter(W, system: PolySystem, accept_tol: float = 1e-4,
                      condition: Condition | None = None, mode: str = "real") -> tuple:
    """Drop points that miss a generator; returns ``(kept, accuracy, status)``."""
    W = np.atleast_2d(np.asarray(W, dtype=complex)) if len(W) else np.zeros((0, system.n), complex)
    kept = []
    for v in W:
        if mode == "real" and np.abs(v.imag).max(initial=0.0) > accept_tol:
            continue
        pt = v.real if mode == "real" else v
        if any(abs(evaluate(h, pt)) > accept_tol for h in system.equalities):
            continue
        if any(np.real(evaluate(g, pt)) < -accept_tol for g in system.inequalities):
            continue
        kept.append(pt)
    acc = max((abs(evaluate(h, v)) for v in kept for h in system.equalities), default=0.0)
    dropped = len(kept) < len(W)
    certified = not dropped and (condition in CERTIFYING or len(kept) == len(W))
    status = (ExtractionStatus.RADICAL_CERTIFIED if certified and len(W) > 0
              else ExtractionStatus.SUPERSET_RETURNED)
    return np.array(kept) if kept else np.zeros((0, system.n)), float(acc), status


def kernel_basis(M: np.ndarray, n: int, zero_tol=linalg.SVD_ZERO_TOL,
                 gap_ratio=linalg.GAP_RATIO) -> list:
    """Polynomials from the right singular vectors past the rank cut."""
    res = linalg.svd(M)
    r = linalg.numerical_rank(res.singular_values, zero_tol, gap_ratio)
    monos = enumerate_monomials(n, _deg_of(M, n))
    return [Polynomial.from_vector(res.V[:, k], monos, tol=1e-14) for k in range(r, M.shape[0])]


# ---------------------------------------------------------------- driver

@dataclass
class ExtractionResult:
    points: np.ndarray
    accuracy: float
    status: ExtractionStatus
    basis: QuotientBasis
    comm_error: float
    s: int
    condition: Condition
    border: list = field(default_factory=list)
    groebner: list | None = None
    raw_points: np.ndarray | None = None
    fallback: str | None = None     # set when the monomial route was replaced by SVD


def prebasis_probe(matrices: Sequence[np.ndarray], n: int, tol: Tolerances = Tolerances(),
                   strict: bool = True):
    """First ``s`` at which a greedy basis of ``M_{s-1}`` passes the rank and commutation tests.

    ``matrices[k]`` is ``M_k``.  Returns ``(s, basis, mult_system)`` or ``None``.
    ``strict=False`` skips the rank test on the ``B`` plus border block and
    relies on the commutation gate alone.
    """
    for s in range(1, len(matrices)):
        try:
            B = greedy_monomial_basis(matrices[s - 1], n, None, None, tol.zero_tol, tol.gap_ratio)
        except BasisIncomplete:
            continue
        pos = index_map(n, s).lookup
        idx = [pos[b] for b in B.elements] + [pos[c] for c in B.border]
        sub = matrices[s][np.ix_(idx, idx)]
        r = linalg.numerical_rank(linalg.svd(sub).singular_values, tol.zero_tol, tol.gap_ratio)
        if strict and r != B.size:
            continue
        try:
            ms = multiplication_matrices(matrices[s], B)
        except SingularBasisBlock:
            continue
        if ms.comm_error <= tol.comm_tol:
            return s, B, ms
    return None


def extract_at(matrices: Sequence[np.ndarray], n: int, s: int, method: str = "monomial",
               order: MonomialOrder | None = None, tol: Tolerances = Tolerances(),
               fallback: bool = True, y: MomentSequence | None = None) -> tuple:
    """Basis and multiplication matrices at order ``s``; returns ``(basis, ms, fallback_note)``.

    ``method`` is ``svd``, ``monomial`` or ``sieve`` (the latter needs ``y``
    and ``order``).  With ``fallback`` a monomial basis whose matrices fail
    the commutation gate is replaced by the SVD basis.
    """
    note = None
    if method == "svd":
        basis = svd_basis(matrices[s - 1], n, None, tol.zero_tol, tol.gap_ratio)
        ms = multiplication_matrices(matrices[s], basis)
        return basis, ms, note
    if method == "sieve":
        if y is None or order is None:
            raise ValueError("sieve basis needs the moment sequence and an ordering")
        basis, seq = sieve_basis(y, s, order, tol)
        ms = multiplication_matrices(assemble_moment_matrix(seq, basis.degree + 1), basis)
    elif method == "monomial":
        basis = greedy_monomial_basis(matrices[s - 1], n, None, None, tol.zero_tol, tol.gap_ratio)
        ms = multiplication_matrices(matrices[s], basis)
    else:
        raise ValueError(f"unknown basis method {method!r}")
    if fallback and ms.comm_error > tol.comm_tol:
        note = f"{basis.kind.value} comm error {ms.comm_error:.3g}; switched to SVD basis"
        basis = svd_basis(matrices[s - 1], n, None, tol.zero_tol, tol.gap_ratio)
        ms = multiplication_matrices(matrices[s], basis)
    return basis, ms, note


def extract_from_matrices(matrices: Sequence[np.ndarray], system: PolySystem, d: int,
                          method: str = "monomial", order: MonomialOrder | None = None,
                          tol: Tolerances = Tolerances(), seed: int = 0, mode: str = "real",
                          report: RankReport | None = None, fallback: bool = True,
                          y: MomentSequence | None = None, certified: tuple | None = None,
                          strict_probe: bool = True) -> tuple:
    """Full extraction from nested moment matrices ``M_0..M_t``.

    Returns ``(report, result)``; ``result`` is ``None`` when nothing could be
    extracted at this order.  ``certified`` overrides the ``(s, condition)``
    read off the ranks of ``matrices`` (the complex pipeline compares two
    rank sequences).
    """
    n = system.n
    if report is None:
        report = rank_report_from_matrices(matrices, tol.zero_tol, tol.gap_ratio)
    if certified is None:
        s, cond = certify_condition(report, d)
    else:
        s, cond = certified
        report.s, report.condition = s, cond
    if cond == Condition.NONE:
        return report, None
    note = None
    if cond == Condition.PREBASIS_ONLY:
        probe = prebasis_probe(matrices, n, tol, strict_probe)
        if probe is None:
            report.condition, report.s = Condition.NONE, None
            return report, None
        s, basis, ms = probe
        report.s = s
    else:
        basis, ms, note = extract_at(matrices, n, s, method, order, tol, fallback, y)
    try:
        W = extract_roots(ms, seed, tol.comm_tol, tol.sep_tol)
    except (NonCommuting, DegenerateSpectrum):
        return report, ExtractionResult(np.zeros((0, n)), float("nan"),
                                        ExtractionStatus.SUPERSET_RETURNED, basis, ms.comm_error,
                                        s, cond, fallback=note)
    kept, acc, status = verify_and_filter(W, system, tol.accept_tol, cond, mode)
    border, gb = [], None
    if basis.is_monomial and basis.order_ideal:
        border = border_basis(ms, basis)
        if order is not None:
            try:
                gb = groebner_from_border(border, basis, order)
            except NotStandardMonomialBasis:
                gb = None
    return report, ExtractionResult(kept, acc, status, basis, ms.comm_error, s, cond, border, gb,
                                    W, note)


def extract_from_moments(y: MomentSequence, system: PolySystem, method: str = "monomial",
                         order: MonomialOrder | None = None, tol: Tolerances = Tolerances(),
                         seed: int = 0, fallback: bool = True, strict_probe: bool = True) -> tuple:
    """Real-mode pipeline on a moment sequence from the SDP solver."""
    mats = [assemble_moment_matrix(y, k) for k in range(y.t + 1)]
    return extract_from_matrices(mats, system, system.d, method, order, tol, seed, "real",
                                 None, fallback, y, strict_probe=strict_probe)
