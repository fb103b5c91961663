"""Maximum-rank feasibility solver for moment relaxations.

The feasible set ``{y : y_0 = 1, equality rows, every PSD block >= 0}`` usually
has no interior, so an analytic center does not exist.  We instead follow the
central path of the shifted program

    minimize eps  s.t.  B_k(y) + eps I >= 0,  tr M_t(y) <= gamma

whose limit point (``eps -> 0``) lies in the relative interior of the optimal
face, i.e. it is a maximum-rank feasible point.  A strictly positive lower
bound on ``eps`` certifies infeasibility.  When some ``eps < 0`` is reached the
feasible set has interior and we return its analytic center instead.

Convergence along the path is slow on faces of singularity degree above one.
A facial-reduction step (exposing directions read off the dual blocks) is
available but off by default: with dual estimates at a moderate gap it tends
to cut too much.  Tail singular values of the returned point can therefore sit
near 1e-5 on such faces.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import linalg
from .errors import NumericalFailure, OrderTooSmall
from .moment import (LinearConstraintSystem, MomentSequence, assemble_moment_matrix,
                     index_map, localizing_equalities, localizing_operator, moment_operator)
from .polysys import PolySystem, half_degree, num_monomials

log = logging.getLogger(__name__)


class Status(str, Enum):
    INTERIOR_POINT = "InteriorPoint"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class PsdBlock:
    """Linear map ``y -> B(y)`` stored as a sparse ``(dim*dim, N)`` operator."""

    name: str
    dim: int
    operator: sp.csr_matrix

    def matrix(self, values) -> np.ndarray:
        B = (self.operator @ np.asarray(values)).reshape(self.dim, self.dim)
        return (B + B.T) / 2


@dataclass(frozen=True)
class SdpProblem:
    n: int
    t: int
    blocks: tuple
    equalities: LinearConstraintSystem
    # builds the returned sequence from raw values; real moments by default
    factory: Callable | None = None

    @property
    def num_variables(self) -> int:
        return self.equalities.matrix.shape[1]

    def sequence(self, values):
        if self.factory is not None:
            return self.factory(values)
        return MomentSequence(self.n, self.t, values)

    @property
    def main(self) -> PsdBlock:
        return self.blocks[0]

    def block_matrices(self, values) -> list:
        return [b.matrix(values) for b in self.blocks]

    def violation(self, values) -> tuple:
        """(equality residual, most negative block eigenvalue)."""
        res = self.equalities.residual(values)
        worst = min(linalg.min_eig(B) for B in self.block_matrices(values))
        return res, worst


@dataclass
class SolverOptions:
    trace_cap: float | None = None      # default 1e3 * dim(M_t)
    gap_tol: float = 1e-11              # stop once nu / tau falls below this
    infeasible_tol: float = 1e-6
    newton_tol: float = 1e-10
    center_tol: float = 0.5             # Newton decrement accepted between tau updates
    final_center_tol: float = 1e-6      # decrement at the last tau
    tau_factor: float = 8.0
    max_newton: int = 600
    null_tol: float = 1e-10
    reduce_tol: float = 1e-9            # face-constraint null-space tolerance
    expose_ratio: float = 1e-3          # dual eigenvalues kept as exposing directions
    max_reductions: int = 0


@dataclass
class Certificate:
    """Dual blocks ``S_k^{-1}/tau`` and the implied lower bound on ``eps``."""

    lower_bound: float
    dual_blocks: list
    tau: float


@dataclass
class SdpOutcome:
    status: Status
    y: MomentSequence | None = None
    barrier_value: float = float("nan")
    iterations: int = 0
    violation: float = float("nan")
    equality_residual: float = float("nan")
    eps: float = float("nan")
    certificate: Certificate | None = None
    trace_ratio: float = float("nan")   # tr M_t(y) / trace cap
    reductions: int = 0                 # facial reduction rounds performed
    history: list = field(default_factory=list)


def build_problem(system: PolySystem, t: int) -> SdpProblem:
    """Main moment block, one localizing block per inequality, equality rows and ``y_0 = 1``."""
    if t < system.d:
        raise OrderTooSmall(f"relaxation order {t} < d = {system.d}")
    n = system.n
    N = num_monomials(n, 2 * t)
    blocks = [PsdBlock("moment", num_monomials(n, t), moment_operator(n, t, t))]
    for j, g in enumerate(system.inequalities):
        s = t - half_degree(g)
        blocks.append(PsdBlock(f"ineq{j + 1}", num_monomials(n, s), localizing_operator(g, s, t)))
    mats = [sp.csr_matrix(([1.0], ([0], [0])), shape=(1, N))]
    rhs = [np.ones(1)]
    for h in system.equalities:
        eq = localizing_equalities(h, t)
        mats.append(eq.matrix)
        rhs.append(eq.rhs)
    eqs = LinearConstraintSystem(sp.vstack(mats).tocsr(), np.concatenate(rhs),
                                 tuple(index_map(n, 2 * t).monomials))
    return SdpProblem(n, t, tuple(blocks), eqs)


class _Slice:
    """Affine parametrization ``y = yp + Z w`` plus block restrictions ``V_k^T B_k V_k``."""

    def __init__(self, problem: SdpProblem, null_tol: float):
        A = problem.equalities.matrix.toarray()
        b = problem.equalities.rhs
        self.yp = np.linalg.lstsq(A, b, rcond=None)[0]
        self.Z, _ = linalg.orth_complement(A, tol=null_tol)
        self.ops = [blk.operator for blk in problem.blocks]
        self.V = [np.eye(blk.dim) for blk in problem.blocks]

    def reduced_operators(self):
        out = []
        for op, V in zip(self.ops, self.V):
            if V.shape[1] == 0:
                out.append(None)
                continue
            K = np.kron(V.T, V.T)
            out.append(np.asarray(sp.csr_matrix(op).T.dot(K.T)).T if sp.issparse(op) else K @ op)
        return out

    def restrict(self, k: int, T: np.ndarray, Vnew: np.ndarray, tol: float) -> None:
        """Impose ``T^T B_k(y) = 0`` and shrink block ``k`` to ``V_k Vnew``."""
        dim = self.V[k].shape[0]
        C = np.asarray(sp.csr_matrix(self.ops[k]).T.dot(np.kron(T.T, np.eye(dim)).T)).T
        CZ = C @ self.Z
        w = np.linalg.lstsq(CZ, -C @ self.yp, rcond=None)[0]
        self.yp = self.yp + self.Z @ w
        Zn, _ = linalg.orth_complement(CZ, tol=tol)
        self.Z = self.Z @ Zn
        self.V[k] = self.V[k] @ Vnew


class _Barrier:
    """Log-det barrier over ``y = yp + Z z`` for the restricted blocks.

    ``shift`` is ``None`` (an extra variable ``eps`` is appended and added to
    every block) or a fixed float added to every block.  The trace cap acts on
    block 0.
    """

    def __init__(self, sl: _Slice, gamma: float, shift):
        self.yp, self.Z = sl.yp, sl.Z
        self.p = self.Z.shape[1]
        self.gamma = gamma
        self.shift = shift
        self.block_ids, self.B0, self.Ak = [], [], []
        for k, op in enumerate(sl.reduced_operators()):
            if op is None:
                continue
            dim = sl.V[k].shape[1]
            B0 = (op @ self.yp).reshape(dim, dim)
            D = np.asarray(op @ self.Z).T.reshape(self.p, dim, dim)
            self.block_ids.append(k)
            self.B0.append((B0 + B0.T) / 2)
            self.Ak.append((D + D.transpose(0, 2, 1)) / 2)
        self.dims = [B.shape[0] for B in self.B0]
        self.cap0 = float(np.trace(self.B0[0]))
        self.ccap = np.trace(self.Ak[0], axis1=1, axis2=2)
        self.nvar = self.p + (1 if shift is None else 0)
        self.nu = sum(self.dims) + 1

    def with_shift(self, shift) -> "_Barrier":
        other = object.__new__(_Barrier)
        other.__dict__.update(self.__dict__)
        other.shift = shift
        other.nvar = self.p + (1 if shift is None else 0)
        return other

    def y(self, x) -> np.ndarray:
        return self.yp + self.Z @ x[: self.p]

    def eps(self, x) -> float:
        return float(x[self.p]) if self.shift is None else float(self.shift)

    def slacks(self, x):
        z = x[: self.p]
        e = self.eps(x)
        Ss = [B0 + np.tensordot(z, A, axes=1) + e * np.eye(B0.shape[0])
              for B0, A in zip(self.B0, self.Ak)]
        cap = self.gamma - self.cap0 - float(self.ccap @ z)
        return Ss, cap

    def value(self, x):
        """Barrier value, or ``inf`` outside the domain."""
        Ss, cap = self.slacks(x)
        if cap <= 0:
            return np.inf
        total = -np.log(cap)
        for S in Ss:
            try:
                L = np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                return np.inf
            total -= 2.0 * np.log(np.diag(L)).sum()
        return total

    def derivatives(self, x):
        """Value and a factor ``(J, e)`` of the derivatives at a domain point.

        The barrier gradient is ``-J^T e`` and its Hessian ``J^T J``; keeping
        the factor lets the Newton step be solved by QR at half the condition
        number of the normal equations.
        """
        Ss, cap = self.slacks(x)
        if cap <= 0:
            raise np.linalg.LinAlgError("trace cap violated")
        val = -np.log(cap)
        rows = [np.concatenate([self.ccap / cap, np.zeros(self.nvar - self.p)])[None, :]]
        rhs = [np.array([-1.0])]
        for S, A in zip(Ss, self.Ak):
            L = np.linalg.cholesky(S)
            val -= 2.0 * np.log(np.diag(L)).sum()
            Linv = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
            G = Linv @ A @ Linv.T
            if self.shift is None:
                G = np.concatenate([G, (Linv @ Linv.T)[None]], axis=0)
            dim = S.shape[0]
            iu = np.triu_indices(dim)
            w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
            rows.append((G[:, iu[0], iu[1]] * w).T)
            rhs.append(np.where(iu[0] == iu[1], 1.0, 0.0))
        return val, np.vstack(rows), np.concatenate(rhs)

    def dual_blocks(self, x, tau):
        Ss, _ = self.slacks(x)
        return [np.linalg.inv(S) / tau for S in Ss]


def _newton_direction(J, e, lin):
    """Solve ``J^T J dx = J^T e - lin``; returns ``(dx, decrement)``."""
    d = np.linalg.norm(J, axis=0)
    d[d == 0] = 1.0
    Js = J / d
    Q, R = np.linalg.qr(Js)
    diag = np.abs(np.diag(R))
    if diag.min(initial=np.inf) > 1e-14 * diag.max(initial=0.0):
        u = sla.solve_triangular(R, lin / d, trans="T")
        dx = sla.solve_triangular(R, Q.T @ e - u)
    else:
        H = Js.T @ Js
        dx = np.linalg.lstsq(H, Js.T @ e - lin / d, rcond=1e-15)[0]
    dx = dx / d
    return dx, float(np.linalg.norm(J @ dx))


def _center(bar: _Barrier, x, tau: float, c, tol: float, budget: int, history: list):
    """Damped Newton on ``tau * c.x + barrier``; returns (x, steps, decrement)."""
    steps = 0
    lam = np.inf
    while steps < budget:
        val, J, e = bar.derivatives(x)
        g = tau * c - J.T @ e
        f0 = tau * (c @ x) + val
        dx, lam = _newton_direction(J, e, tau * c)
        history.append((tau, f0, lam))
        if lam <= tol:
            break
        alpha = 1.0 if lam < 0.25 else 1.0 / (1.0 + lam)
        while alpha > 1e-12:
            xn = x + alpha * dx
            fn = tau * (c @ xn) + bar.value(xn)
            if np.isfinite(fn) and fn <= f0 + 1e-4 * alpha * (g @ dx) + 1e-12 * abs(f0):
                break
            alpha /= 2
        else:
            break
        x = xn
        steps += 1
    return x, steps, lam


def _log_iteration(level, k, tau, value, lam, eps):
    log.debug("level %d iter %4d  tau %.3e  barrier %.6e  decrement %.3e  eps %.3e",
              level, k, tau, value, lam, eps)


@dataclass
class _PathResult:
    kind: str              # "infeasible", "interior", "boundary", "failure"
    x: np.ndarray
    tau: float
    steps: int
    value: float = float("nan")
    lower: float = float("nan")


def _follow_path(bar: _Barrier, opts: SolverOptions, budget: int, history: list,
                 level: int) -> _PathResult:
    """Minimize ``eps``; stop on a sign of ``eps`` or once ``nu/tau <= gap_tol``."""
    x = np.zeros(bar.nvar)
    Ss, cap = bar.slacks(x)
    if cap <= 0:
        return _PathResult("failure", x, 0.0, 0)
    x[bar.p] = max(0.0, -min(linalg.min_eig(S) for S in Ss)) + 1.0
    _, J, e = bar.derivatives(x)
    c = np.zeros(bar.nvar)
    c[bar.p] = 1.0
    tau = max(float(J[:, bar.p] @ e), 1.0 / x[bar.p])
    total = 0
    while True:
        x, steps, lam = _center(bar, x, tau, c, opts.center_tol, budget - total, history)
        total += steps
        eps = bar.eps(x)
        _log_iteration(level, total, tau, history[-1][1] if history else np.nan, lam, eps)
        if eps < 0:
            return _PathResult("interior", x, tau, total)
        if lam <= opts.center_tol and bar.nu / tau < 0.1 * eps:
            # looks infeasible: certify from a tightly centered point
            x, steps, lam = _center(bar, x, tau, c, 1e-6, budget - total, history)
            total += steps
            eps = bar.eps(x)
            lower = eps - (bar.nu + lam * np.sqrt(bar.nu)) / tau
            if lam <= 1e-3 and lower > opts.infeasible_tol:
                return _PathResult("infeasible", x, tau, total, lower=lower)
        if total >= budget:
            return _PathResult("failure", x, tau, total)
        if lam > opts.center_tol:
            ok = bar.nu / tau <= 1e3 * opts.gap_tol
            return _PathResult("boundary" if ok else "failure", x, tau, total)
        if bar.nu / tau <= opts.gap_tol:
            x, steps, lam = _center(bar, x, tau, c, opts.final_center_tol, budget - total,
                                    history)
            return _PathResult("boundary", x, tau, total + steps)
        tau *= opts.tau_factor


def _exposing_directions(duals: list, ratio: float):
    """Per block, dual eigenvectors carrying a non-negligible share of the dual mass."""
    spectra = [np.linalg.eigh((W + W.T) / 2) for W in duals]
    top = max(float(lam[-1]) for lam, _ in spectra)
    out = []
    for lam, Q in spectra:
        keep = lam >= ratio * top
        out.append((Q[:, keep], Q[:, ~keep]))
    return out


def _result(problem, bar, x, status, iterations, history, reductions, cert=None,
            value=float("nan")):
    y = bar.y(x)
    res, worst = problem.violation(y)
    trace = float(np.trace(problem.main.matrix(y)))
    return SdpOutcome(status=status, y=problem.sequence(y),
                      barrier_value=value, iterations=iterations, violation=max(0.0, -worst),
                      equality_residual=res, eps=bar.eps(x) if bar.shift is None else 0.0,
                      certificate=cert, trace_ratio=trace / bar.gamma, reductions=reductions,
                      history=history)


def solve_feasible_max_rank(problem: SdpProblem, opts: SolverOptions | None = None) -> SdpOutcome:
    """Maximum-rank point of the moment spectrahedron, or an infeasibility verdict."""
    opts = opts or SolverOptions()
    gamma = opts.trace_cap if opts.trace_cap is not None else 1e3 * problem.main.dim
    sl = _Slice(problem, opts.null_tol)
    history: list = []
    total = 0
    previous = None
    for level in range(opts.max_reductions + 1):
        if sl.Z.shape[1] == 0:
            # the affine slice is a single point: check it directly
            y = sl.yp
            res, worst = problem.violation(y)
            trace = float(np.trace(problem.main.matrix(y)))
            if level == 0 and (res > 1e-8 or worst < -opts.infeasible_tol or trace >= gamma):
                cert = Certificate(lower_bound=max(-worst, res), dual_blocks=[], tau=np.inf)
                return SdpOutcome(Status.INFEASIBLE, certificate=cert, history=history)
            return SdpOutcome(Status.INTERIOR_POINT, problem.sequence(y),
                              violation=max(0.0, -worst), equality_residual=res,
                              iterations=total, reductions=level, history=history)
        bar = _Barrier(sl, gamma, None)
        path = _follow_path(bar, opts, opts.max_newton - total, history, level)
        total += path.steps
        if path.kind == "infeasible":
            if level == 0:
                cert = Certificate(path.lower, bar.dual_blocks(path.x, path.tau), path.tau)
                return _result(problem, bar, path.x, Status.INFEASIBLE, total, history, level,
                               cert)
            # a reduction cut too deep; fall back to the last boundary point
            return previous
        if path.kind == "failure":
            if previous is not None:
                return previous
            return _result(problem, bar, path.x, Status.NUMERICAL_FAILURE, total, history, level)
        if path.kind == "interior":
            inner = bar.with_shift(0.0)
            z = path.x[: bar.p].copy()
            z, steps, lam = _center(inner, z, 0.0, np.zeros(bar.p), opts.newton_tol,
                                    max(opts.max_newton - total, 50), history)
            total += steps
            status = Status.INTERIOR_POINT if lam <= 1e-6 else Status.NUMERICAL_FAILURE
            out = _result(problem, inner, z, status, total, history, level,
                          value=inner.value(z))
            if status == Status.NUMERICAL_FAILURE and previous is not None:
                return previous
            return out
        # boundary: the optimal face has no interior in the current slice
        previous = _result(problem, bar, path.x, Status.INTERIOR_POINT, total, history, level)
        duals = bar.dual_blocks(path.x, path.tau)
        split = _exposing_directions(duals, opts.expose_ratio)
        if all(U.shape[1] == 0 for U, _ in split):
            return previous
        for k, (U, Vn) in zip(bar.block_ids, split):
            if U.shape[1]:
                sl.restrict(k, sl.V[k] @ U, Vn, opts.reduce_tol)
    return previous


def _kernel_vectors(M, zero_tol, gap_ratio):
    res = linalg.svd(M)
    r = linalg.numerical_rank(res.singular_values, zero_tol, gap_ratio)
    return res.U[:, r:], r


def refine_max_rank(problem: SdpProblem, y_hat: MomentSequence, *, eps_f: float = 1e-9,
                    zero_tol: float = linalg.SVD_ZERO_TOL, gap_ratio: float = linalg.GAP_RATIO,
                    opts: SolverOptions | None = None, max_iter: int | None = None,
                    trace: list | None = None) -> MomentSequence:
    """Raise the rank of a feasible point by pushing mass into its kernel.

    Each round maximizes ``<C, M_t(y)>`` with ``C = sum u u^T`` over kernel
    vectors ``u`` of ``M_t(y_hat)`` on the ``eps_f``-relaxed feasible set and
    moves to the midpoint.  A midpoint is accepted only if its numerical rank
    is strictly larger; otherwise the current point is returned.  ``trace``
    collects the rank of every accepted point.
    """
    opts = opts or SolverOptions()
    gamma = opts.trace_cap if opts.trace_cap is not None else 1e3 * problem.main.dim
    bar = _Barrier(_Slice(problem, opts.null_tol), gamma, eps_f)
    max_iter = problem.main.dim if max_iter is None else max_iter
    y = y_hat.values.copy()
    U, r = _kernel_vectors(problem.main.matrix(y), zero_tol, gap_ratio)
    if trace is not None:
        trace.append(r)
    for _ in range(max_iter):
        if U.shape[1] == 0:
            break
        C = U @ U.T
        # maximize <C, M(yp + Z z)>, i.e. minimize c.z
        c = -np.einsum("ij,kij->k", C, bar.Ak[0])
        base = float(np.sum(C * bar.B0[0]))
        z = np.linalg.lstsq(bar.Z, y - bar.yp, rcond=None)[0]
        if not np.isfinite(bar.value(z)):
            raise NumericalFailure("refinement start point is not feasible")
        tau = 1.0
        hist: list = []
        while bar.nu / tau > 1e-10:
            z, _, _ = _center(bar, z, tau, c, 0.5, opts.max_newton, hist)
            tau *= opts.tau_factor
        if base - float(c @ z) <= 1e-9:
            break
        mid = 0.5 * (y + bar.y(z))
        U_mid, r_mid = _kernel_vectors(problem.main.matrix(mid), zero_tol, gap_ratio)
        if r_mid <= r:
            break
        y, U, r = mid, U_mid, r_mid
        if trace is not None:
            trace.append(r)
    return problem.sequence(y)
