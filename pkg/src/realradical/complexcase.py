"""Complex varieties of real-coefficient systems via real-valued complex moments.

A complex moment ``y_{g,g'} = L(conj(x)^g x^g')`` is stored once per unordered
pair ``{g, g'}``; for real generators a real symmetric sequence suffices.  The
full matrix is indexed by monomials ``conj(x)^a x^a'`` of total degree at most
``t`` (exponents in ``2n`` variables, conjugate part first); its rows with
``a = 0`` form the pruned matrix, which the real extraction code consumes
unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import ComplexCoefficientsUnsupported, OrderTooSmall
from .extract import (Condition, ExtractionResult, RankReport, Tolerances, extract_from_matrices,
                      rank_report_from_matrices)
from .moment import LinearConstraintSystem
from .polysys import (MonomialOrder, PolySystem, Polynomial, add_exp, enumerate_monomials,
                      half_degree, num_monomials)
from .sdp import PsdBlock, SdpOutcome, SdpProblem, SolverOptions, Status, solve_feasible_max_rank


def _split(a, n):
    return a[:n], a[n:]


@lru_cache(maxsize=None)
def _pair_index(n: int, t: int):
    """Variables for unordered pairs with ``|g|+|g'| <= 2t``.

    Returns ``(pairs, lookup)`` where ``lookup`` maps both orientations of a
    pair (as a ``2n`` exponent) to its variable.
    """
    pairs, lookup = [], {}
    for e in enumerate_monomials(2 * n, 2 * t):
        g, h = _split(e, n)
        key = min((g, h), (h, g))
        if key not in lookup:
            lookup[key] = len(pairs)
            pairs.append(key)
    return tuple(pairs), lookup


def _var(lookup, g, h) -> int:
    return lookup[min((g, h), (h, g))]


@dataclass(frozen=True)
class PrunedIndexSet:
    """Rows of the full index set whose conjugate part is zero."""

    n: int
    t: int
    positions: tuple

    @classmethod
    def build(cls, n: int, t: int) -> "PrunedIndexSet":
        zero = (0,) * n
        pos = tuple(i for i, e in enumerate(enumerate_monomials(2 * n, t)) if e[:n] == zero)
        return cls(n, t, pos)

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class ComplexMomentSequence:
    """Real symmetric complex-moment sequence of order ``t``."""

    n: int
    t: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        expected = len(_pair_index(self.n, self.t)[0])
        if v.shape != (expected,):
            raise ValueError(f"expected {expected} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, pair) -> float:
        g, h = pair
        return float(self.values[_var(_pair_index(self.n, self.t)[1], tuple(g), tuple(h))])

    @classmethod
    def from_measure(cls, points, weights, t: int) -> "ComplexMomentSequence":
        """Moments of ``sum_k w_k delta_{v_k}``, symmetrized under conjugation.

        The stored value is the real part, i.e. the moment of the measure
        averaged with its conjugate image; for conjugation-closed supports with
        matching weights nothing changes.
        """
        P = np.atleast_2d(np.asarray(points, dtype=complex))
        w = np.asarray(weights, dtype=float)
        n = P.shape[1]
        pairs, _ = _pair_index(n, t)
        vals = np.empty(len(pairs))
        for k, (g, h) in enumerate(pairs):
            mono = np.prod(np.conj(P) ** np.array(g), axis=1) * np.prod(P ** np.array(h), axis=1)
            vals[k] = float(np.real(w @ mono))
        return cls(n, t, vals)

    @classmethod
    def from_point(cls, v, t: int) -> "ComplexMomentSequence":
        return cls.from_measure([v], [1.0], t)


def _full_index(n: int, s: int) -> list:
    return enumerate_monomials(2 * n, s)


def full_matrix(y: ComplexMomentSequence, s: int | None = None) -> np.ndarray:
    """``M^{2C}_s(y)`` with entry ``((a,a'),(b,b')) = y_{a'+b, a+b'}``."""
    s = y.t if s is None else s
    if s > y.t:
        raise OrderTooSmall(f"s = {s} exceeds sequence order {y.t}")
    n = y.n
    rows = _full_index(n, s)
    _, lookup = _pair_index(n, y.t)
    M = np.empty((len(rows), len(rows)))
    for i, e in enumerate(rows):
        a, a2 = _split(e, n)
        for j in range(i, len(rows)):
            b, b2 = _split(rows[j], n)
            M[i, j] = M[j, i] = y.values[_var(lookup, add_exp(a2, b), add_exp(a, b2))]
    return M


def pruned_matrix(y: ComplexMomentSequence, s: int | None = None) -> np.ndarray:
    """``M^C_s(y)``: entry ``(a', b') = y_{a', b'}`` over ``T_{n,s}``."""
    s = y.t if s is None else s
    if s > y.t:
        raise OrderTooSmall(f"s = {s} exceeds sequence order {y.t}")
    monos = enumerate_monomials(y.n, s)
    _, lookup = _pair_index(y.n, y.t)
    M = np.empty((len(monos), len(monos)))
    for i, a in enumerate(monos):
        for j in range(i, len(monos)):
            M[i, j] = M[j, i] = y.values[_var(lookup, a, monos[j])]
    return M


# ---------------------------------------------------------------- SDP

def ensure_real_coefficients(generators: Sequence) -> None:
    """Reject generators given as ``{exponent: coeff}`` maps with complex coefficients."""
    for h in generators:
        items = h.items() if isinstance(h, (Polynomial, Mapping)) else h
        for _, c in items:
            if abs(np.imag(c)) > 0:
                raise ComplexCoefficientsUnsupported(
                    "complex mode needs real generator coefficients")


def _full_operator(n: int, s: int, t: int) -> sp.csr_matrix:
    rows = _full_index(n, s)
    pairs, lookup = _pair_index(n, t)
    dim = len(rows)
    r, c = [], []
    for i, e in enumerate(rows):
        a, a2 = _split(e, n)
        for j, f in enumerate(rows):
            b, b2 = _split(f, n)
            r.append(i * dim + j)
            c.append(_var(lookup, add_exp(a2, b), add_exp(a, b2)))
    return sp.csr_matrix((np.ones(len(r)), (r, c)), shape=(dim * dim, len(pairs)))


def _complex_equalities(h: Polynomial, t: int) -> tuple:
    """Rows ``L(conj(x)^g x^g' h(x)) = 0`` for ``|g|+|g'| <= 2(t - d_h)``."""
    n = h.n
    pairs, lookup = _pair_index(n, t)
    rows, cols, data = [], [], []
    gammas = enumerate_monomials(2 * n, 2 * (t - half_degree(h)))
    for r, e in enumerate(gammas):
        g, g2 = _split(e, n)
        for b, coef in h.items():
            rows.append(r)
            cols.append(_var(lookup, g, add_exp(g2, b)))
            data.append(coef)
    return sp.csr_matrix((data, (rows, cols)), shape=(len(gammas), len(pairs)))


def build_full_complex_problem(system: PolySystem, t: int) -> SdpProblem:
    """Main block ``M^{2C}_t(y)``, the shifted equality rows and ``y_00 = 1``."""
    ensure_real_coefficients(system.equalities)
    if system.inequalities:
        raise ValueError("complex mode takes equality generators only")
    if t < system.d:
        raise OrderTooSmall(f"relaxation order {t} < d = {system.d}")
    n = system.n
    pairs, lookup = _pair_index(n, t)
    N = len(pairs)
    block = PsdBlock("complex-moment", num_monomials(2 * n, t), _full_operator(n, t, t))
    zero = (0,) * n
    mats = [sp.csr_matrix(([1.0], ([0], [lookup[(zero, zero)]])), shape=(1, N))]
    mats += [_complex_equalities(h, t) for h in system.equalities]
    A = sp.vstack(mats).tocsr()
    rhs = np.zeros(A.shape[0])
    rhs[0] = 1.0
    eqs = LinearConstraintSystem(A, rhs, tuple(g + h for g, h in pairs))
    return SdpProblem(n, t, (block,), eqs,
                      factory=lambda v: ComplexMomentSequence(n, t, v))


# ---------------------------------------------------------------- conditions

def certify_complex_condition(full_ranks: Sequence[int], pruned_ranks: Sequence[int], d: int,
                              t: int | None = None):
    """``(s, condition)`` for the first flat pair, or ``None``.

    The strongest class wins, then the smallest ``s``.
    """
    t = min(len(full_ranks), len(pruned_ranks)) - 1 if t is None else t
    for s in range(max(d, 1), t + 1):
        if full_ranks[s] == pruned_ranks[s - d]:
            return s, Condition.FLAT_D
    for s in range(max(2 * d, 1), t + 1):
        if full_ranks[s] == pruned_ranks[s - 1]:
            return s, Condition.FLAT_ONE_HIGH
    for s in range(1, min(2 * d, t + 1)):
        if full_ranks[s] == pruned_ranks[s - 1]:
            return s, Condition.FLAT_ONE_PARTIAL
    return None


@dataclass
class ComplexRankReport:
    full: RankReport
    pruned: RankReport
    s: int | None = None
    condition: Condition = Condition.NONE

    @property
    def ranks(self) -> tuple:
        return self.pruned.ranks


def complex_rank_report(y: ComplexMomentSequence, d: int,
                        tol: Tolerances = Tolerances()) -> tuple:
    """Rank reports of both families plus the pruned matrices ``M^C_0..M^C_t``."""
    F = full_matrix(y)
    full_pos = [num_monomials(2 * y.n, k) for k in range(y.t + 1)]
    full = rank_report_from_matrices([F[:m, :m] for m in full_pos], tol.zero_tol, tol.gap_ratio)
    P = pruned_matrix(y)
    pruned_mats = [P[:m, :m] for m in (num_monomials(y.n, k) for k in range(y.t + 1))]
    pruned = rank_report_from_matrices(pruned_mats, tol.zero_tol, tol.gap_ratio)
    found = certify_complex_condition(full.ranks, pruned.ranks, d)
    rep = ComplexRankReport(full, pruned)
    if found is not None:
        rep.s, rep.condition = found
    return rep, pruned_mats


def conjugation_pairing_error(points) -> float:
    """Largest distance from a point's conjugate to the nearest extracted point."""
    P = np.atleast_2d(np.asarray(points, dtype=complex))
    if P.shape[0] == 0:
        return 0.0
    D = np.linalg.norm(np.conj(P)[:, None, :] - P[None, :, :], axis=2)
    return float(D.min(axis=1).max())


def extract_complex(y: ComplexMomentSequence, system: PolySystem, method: str = "monomial",
                    order: MonomialOrder | None = None, tol: Tolerances = Tolerances(),
                    seed: int = 0, fallback: bool = True) -> tuple:
    """Rank analysis and root extraction on the pruned matrices.

    Returns ``(report, result)``; ``result`` is ``None`` if no condition holds
    and no commuting prebasis was found.
    """
    rep, mats = complex_rank_report(y, system.d, tol)
    certified = (rep.s, rep.condition) if rep.s is not None else (y.t, Condition.PREBASIS_ONLY)
    if y.t < 1:
        return rep, None
    method = "monomial" if method == "sieve" else method
    _, result = extract_from_matrices(mats, system, system.d, method, order, tol, seed,
                                      "complex", rep.pruned, fallback, None, certified)
    rep.s, rep.condition = rep.pruned.s, rep.pruned.condition
    return rep, result


@dataclass
class ComplexRun:
    outcome: SdpOutcome
    report: ComplexRankReport | None = None
    result: ExtractionResult | None = None
    notes: list = field(default_factory=list)


def solve_complex(system: PolySystem, t: int, opts: SolverOptions | None = None,
                  method: str = "monomial", order: MonomialOrder | None = None,
                  tol: Tolerances = Tolerances(), seed: int = 0) -> ComplexRun:
    """Build, solve and extract at a single order ``t``."""
    problem = build_full_complex_problem(system, t)
    outcome = solve_feasible_max_rank(problem, opts)
    run = ComplexRun(outcome)
    if outcome.status != Status.INTERIOR_POINT:
        return run
    run.report, run.result = extract_complex(outcome.y, system, method, order, tol, seed)
    return run
