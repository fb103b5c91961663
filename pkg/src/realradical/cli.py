"""Command-line front end: ``realradical solve <file> [options]``.

System files are UTF-8 text with ``#`` comments, one ``vars:`` line and any
number of ``eq:`` / ``ineq:`` lines (``ineq: g`` means ``g >= 0``).  A bare
name such as ``cox3`` resolves to the bundled corpus.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import complexcase
from .errors import OrderExhausted, ParseError, RealRadicalError
from .extract import ExtractionResult, ExtractionStatus, Tolerances, extract_from_moments
from .polysys import (MonomialOrder, PolySystem, Polynomial, format_monomial, format_polynomial,
                      parse_polynomial)
from .sdp import SolverOptions, Status, build_problem, solve_feasible_max_rank

log = logging.getLogger(__name__)

EXIT_SOLVED, EXIT_EMPTY, EXIT_EXHAUSTED, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3, 4

SOLVED = "Solved"
EMPTY = "EmptyVariety"
EXHAUSTED = "OrderExhausted"
FAILED = "NumericalFailure"


@dataclass
class RunConfig:
    mode: str = "real"
    order: int | None = None            # fixed t; otherwise auto from max(d, 1)
    max_order: int | None = None        # default d + 6
    basis: str = "monomial"
    ordering: str = "grlex"
    var_order: tuple | None = None      # variable names, most significant first
    tol: Tolerances = field(default_factory=Tolerances)
    trace_cap: float | None = None
    seed: int = 0
    fallback: bool = True               # SVD basis when the monomial one fails to commute
    strict_probe: bool = True
    json_path: str | None = None

    def __post_init__(self):
        if self.mode not in ("real", "complex"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.basis not in ("svd", "monomial", "sieve"):
            raise ValueError(f"unknown basis method {self.basis!r}")
        if self.trace_cap is not None and not self.trace_cap > 0:
            raise ValueError("trace cap must be positive")

    def monomial_order(self, system: PolySystem) -> MonomialOrder:
        prec = None
        if self.var_order:
            missing = [v for v in self.var_order if v not in system.names]
            if missing or len(set(self.var_order)) != system.n:
                raise ValueError("--var-order must list every variable exactly once")
            prec = tuple(system.names.index(v) for v in self.var_order)
        return MonomialOrder(self.ordering, prec)

    def orders(self, system: PolySystem) -> range:
        if self.order is not None:
            if self.order < system.d:
                raise ValueError(f"order {self.order} < d = {system.d}")
            return range(self.order, self.order + 1)
        top = system.d + 6 if self.max_order is None else self.max_order
        if top < system.d:
            raise ValueError(f"max order {top} < d = {system.d}")
        return range(max(system.d, 1), top + 1)


@dataclass
class OrderRecord:
    t: int
    sdp_status: str
    ranks: tuple = ()
    full_ranks: tuple | None = None     # complex mode only
    condition: str = "None"
    s: int | None = None
    basis: str | None = None
    comm_error: float | None = None
    accuracy: float | None = None
    status: str | None = None
    trace_cap: float | None = None
    trace_ratio: float | None = None
    iterations: int = 0
    seconds: float = 0.0
    note: str | None = None


@dataclass
class RunReport:
    status: str
    mode: str
    system: PolySystem
    records: list = field(default_factory=list)
    result: ExtractionResult | None = None
    certificate: float | None = None    # lower bound on the shift when empty

    @property
    def exit_code(self) -> int:
        return {SOLVED: EXIT_SOLVED, EMPTY: EXIT_EMPTY, EXHAUSTED: EXIT_EXHAUSTED,
                FAILED: EXIT_NUMERICAL}[self.status]


# ---------------------------------------------------------------- input

def resolve_path(name: str | Path) -> Path:
    p = Path(name)
    if p.exists():
        return p
    corpus = resources.files("realradical") / "corpus"
    for cand in (corpus / str(name), corpus / f"{name}.poly"):
        if cand.is_file():
            return Path(str(cand))
    raise FileNotFoundError(f"no system file or corpus entry named {name!r}")


def parse_system(text: str) -> PolySystem:
    names, eqs, ineqs = None, [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, body = line.partition(":")
        key = key.strip().lower()
        if not sep:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        body = body.strip()
        if key == "vars":
            if names is not None:
                raise ParseError("duplicate vars line", lineno)
            names = body.replace(",", " ").split()
            if not names or len(set(names)) != len(names):
                raise ParseError("vars needs distinct variable names", lineno)
        elif key in ("eq", "ineq"):
            (eqs if key == "eq" else ineqs).append((lineno, body))
        else:
            raise ParseError(f"unknown key {key!r}", lineno)
    if names is None:
        raise ParseError("missing 'vars:' line")
    if not eqs:
        raise ParseError("at least one 'eq:' line is required")

    def parse(items):
        out = []
        for lineno, body in items:
            try:
                out.append(parse_polynomial(body, names))
            except (RealRadicalError, ValueError) as exc:
                raise ParseError(str(exc), lineno) from exc
        return out

    try:
        return PolySystem(len(names), parse(eqs), parse(ineqs), names)
    except ParseError:
        raise
    except (RealRadicalError, ValueError) as exc:
        raise ParseError(str(exc)) from exc


def load_system(path) -> PolySystem:
    return parse_system(resolve_path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- driver

def _solve_once(system, t, config, cap, order):
    opts = SolverOptions(trace_cap=cap)
    if config.mode == "complex":
        problem = complexcase.build_full_complex_problem(system, t)
    else:
        problem = build_problem(system, t)
    cap_used = cap if cap is not None else 1e3 * problem.main.dim
    start = time.perf_counter()
    outcome = solve_feasible_max_rank(problem, opts)
    rec = OrderRecord(t, outcome.status.value, trace_cap=cap_used, iterations=outcome.iterations)
    result = None
    if outcome.status == Status.INTERIOR_POINT:
        rec.trace_ratio = float(outcome.trace_ratio)
        if config.mode == "complex":
            rep, result = complexcase.extract_complex(outcome.y, system, config.basis, order,
                                                      config.tol, config.seed, config.fallback)
            rec.ranks, rec.full_ranks = tuple(rep.pruned.ranks), tuple(rep.full.ranks)
            rec.condition, rec.s = rep.condition.value, rep.s
        else:
            rep, result = extract_from_moments(outcome.y, system, config.basis, order,
                                               config.tol, config.seed, config.fallback,
                                               config.strict_probe)
            rec.ranks, rec.condition, rec.s = tuple(rep.ranks), rep.condition.value, rep.s
        if result is not None:
            rec.basis = result.basis.kind.value
            rec.comm_error = float(result.comm_error)
            rec.accuracy = float(result.accuracy)
            rec.status = result.status.value
            rec.note = result.fallback
    rec.seconds = time.perf_counter() - start
    return outcome, rec, result


def run(config: RunConfig, source) -> RunReport:
    """Increase the relaxation order until a certified extraction succeeds.

    ``source`` is a path, corpus name or :class:`PolySystem`.  Raises
    :class:`OrderExhausted` (carrying the report) when no order succeeds.
    """
    system = source if isinstance(source, PolySystem) else load_system(source)
    order = config.monomial_order(system)
    report = RunReport(EXHAUSTED, config.mode, system)
    for t in config.orders(system):
        cap = config.trace_cap
        for attempt in range(2):
            outcome, rec, result = _solve_once(system, t, config, cap, order)
            report.records.append(rec)
            log.info("t=%d ranks=%s condition=%s status=%s", t, rec.ranks, rec.condition,
                     rec.status)
            if outcome.status == Status.INFEASIBLE:
                report.status = EMPTY
                cert = outcome.certificate
                report.certificate = float(cert.lower_bound) if cert is not None else None
                return report
            if result is not None:
                report.result = result
                if result.status == ExtractionStatus.RADICAL_CERTIFIED:
                    report.status = SOLVED
                    return report
            at_cap = rec.trace_ratio is not None and rec.trace_ratio >= 0.99
            if attempt == 0 and at_cap:
                cap = rec.trace_cap * 10
                continue
            break
    if report.records and all(r.sdp_status == Status.NUMERICAL_FAILURE.value
                              for r in report.records):
        report.status = FAILED
        return report
    report.status = EXHAUSTED
    raise OrderExhausted(f"no certified extraction up to t = {report.records[-1].t}", report)


# ---------------------------------------------------------------- output

def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def _poly_json(p, marked=None):
    out = {"terms": [{"exponent": list(a), "coeff": float(c)} for a, c in
                     sorted(p.items(), key=lambda kv: (sum(kv[0]), kv[0]))]}
    if marked is not None:
        out = {"marked": list(marked), **out}
    return out


def report_dict(report: RunReport) -> dict:
    res = report.result
    orders = []
    for r in report.records:
        entry = {"t": r.t, "sdp_status": r.sdp_status, "ranks": list(r.ranks),
                 "condition": r.condition, "s": r.s, "basis": r.basis,
                 "comm_error": _num(r.comm_error), "accuracy": _num(r.accuracy),
                 "status": r.status, "trace_cap": _num(r.trace_cap)}
        if r.full_ranks is not None:
            entry["full_ranks"] = list(r.full_ranks)
        if r.note:
            entry["note"] = r.note
        orders.append(entry)
    out = {"status": report.status, "mode": report.mode, "variables": list(report.system.names),
           "orders": orders, "solutions": [], "border_basis": [], "groebner_basis": None,
           "basis": None}
    if report.certificate is not None:
        out["certificate"] = {"eps_lower_bound": report.certificate}
    if res is not None:
        out["extraction_status"] = res.status.value
        out["solutions"] = [[[float(np.real(c)), float(np.imag(c))] for c in v]
                            for v in np.asarray(res.points, dtype=complex)]
        out["border_basis"] = [_poly_json(g.poly, g.marked) for g in res.border]
        if res.groebner is not None:
            out["groebner_basis"] = [_poly_json(g.poly, g.marked) for g in res.groebner]
        if res.basis.is_monomial:
            elements = [list(b) for b in res.basis.elements]
        else:
            elements = [_poly_json(p) for p in res.basis.polynomials()]
        out["basis"] = {"kind": res.basis.kind.value, "elements": elements}
    return out


def _fmt(x, spec=".5g"):
    return "---" if x is None or not np.isfinite(x) else format(x, spec)


def _point(v, mode):
    if mode == "real":
        return "(" + ", ".join(f"{np.real(c):.8g}" for c in v) + ")"
    return "(" + ", ".join(f"{complex(c).real:.6g}{complex(c).imag:+.6g}i" for c in v) + ")"


def _shown(p, tol=1e-8):
    """Drop round-off terms for display."""
    top = max((abs(c) for _, c in p.items()), default=0.0)
    return Polynomial({a: c for a, c in p.items() if abs(c) > tol * max(1.0, top)}, p.n)


def render_table(report: RunReport) -> str:
    names = report.system.names
    lines = []
    if report.status == EMPTY:
        t = report.records[-1].t
        cert = _fmt(report.certificate, ".3g")
        lines.append(f"status: {EMPTY} at t = {t} (SDP infeasible; shift lower bound {cert})")
        return "\n".join(lines) + "\n"
    head = ["order t", "rank sequence", "extract. order", "accuracy", "comm. error"]
    if report.mode == "complex":
        head.insert(2, "full ranks")
    rows = []
    for r in report.records:
        row = [str(r.t), " ".join(map(str, r.ranks)) or r.sdp_status,
               "---" if r.s is None or r.status is None else f"{r.s} ({r.condition})",
               _fmt(r.accuracy), _fmt(r.comm_error)]
        if report.mode == "complex":
            row.insert(2, " ".join(map(str, r.full_ranks or ())))
        rows.append(row)
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    for row in [head] + rows:
        lines.append(" | ".join(x.ljust(w) for x, w in zip(row, widths)).rstrip())
    lines.append(f"status: {report.status}")
    res = report.result
    if res is not None:
        lines.append(f"extraction: {res.status.value}, basis {res.basis.kind.value}"
                     + (f" ({res.fallback})" if res.fallback else ""))
        if res.basis.is_monomial:
            lines.append("quotient basis: {" + ", ".join(format_monomial(b, names)
                                                         for b in res.basis.elements) + "}")
        lines.append(f"solutions ({len(res.points)}):")
        lines += ["  " + _point(v, report.mode) for v in res.points]
        if res.border:
            lines.append("border basis:")
            lines += [f"  {format_polynomial(_shown(g.poly), names, 6)}" for g in res.border]
        if res.groebner:
            lines.append("Groebner basis:")
            lines += [f"  {format_polynomial(_shown(g.poly), names, 6)}" for g in res.groebner]
    return "\n".join(lines) + "\n"


def render_report(report: RunReport, fmt: str = "table") -> str:
    if fmt == "json":
        return json.dumps(report_dict(report), indent=2) + "\n"
    if fmt == "table":
        return render_table(report)
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="realradical",
                                 description="Real (or complex) roots and real radical ideals "
                                             "of zero-dimensional polynomial systems.")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("solve", help="solve a system file or corpus entry")
    sp.add_argument("file")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--order", type=int, help="fixed relaxation order t")
    grp.add_argument("--max-order", type=int, help="last order tried in auto mode (default d+6)")
    sp.add_argument("--mode", choices=["real", "complex"], default="real")
    sp.add_argument("--basis", choices=["svd", "monomial", "sieve"], default="monomial")
    sp.add_argument("--ordering", choices=["grlex", "grevlex", "lex"], default="grlex")
    sp.add_argument("--var-order", help="comma separated variables, most significant first")
    sp.add_argument("--svd-zero-tol", type=float, default=1e-8)
    sp.add_argument("--gap-ratio", type=float, default=1e-3)
    sp.add_argument("--comm-tol", type=float, default=1e-2)
    sp.add_argument("--accept-tol", type=float, default=1e-4)
    sp.add_argument("--trace-cap", type=float)
    sp.add_argument("--no-fallback", action="store_true",
                    help="keep a non-commuting monomial basis instead of switching to SVD")
    sp.add_argument("--loose-probe", action="store_true",
                    help="prebasis probe without the border-block rank test")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--json", metavar="PATH", help="write the JSON report ('-' for stdout)")
    sp.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("corpus", help="list bundled example systems")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "corpus":
        corpus = resources.files("realradical") / "corpus"
        for entry in sorted(p.name for p in corpus.iterdir() if p.name.endswith(".poly")):
            print(entry[:-5])
        return EXIT_SOLVED
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        tol = Tolerances(zero_tol=args.svd_zero_tol, gap_ratio=args.gap_ratio,
                         comm_tol=args.comm_tol, accept_tol=args.accept_tol)
        config = RunConfig(mode=args.mode, order=args.order, max_order=args.max_order,
                           basis=args.basis, ordering=args.ordering,
                           var_order=tuple(args.var_order.split(",")) if args.var_order else None,
                           tol=tol, trace_cap=args.trace_cap, seed=args.seed,
                           fallback=not args.no_fallback, strict_probe=not args.loose_probe,
                           json_path=args.json)
        system = load_system(args.file)
        try:
            report = run(config, system)
        except OrderExhausted as exc:
            report = exc.report
    except (ParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RealRadicalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if config.json_path == "-":
        sys.stdout.write(render_report(report, "json"))
    else:
        sys.stdout.write(render_report(report, "table"))
        if config.json_path:
            Path(config.json_path).write_text(render_report(report, "json"), encoding="utf-8")
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
