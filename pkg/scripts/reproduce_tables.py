"""Rank sequences, extraction orders, accuracies and commutation errors per
relaxation order for the bundled examples, in both basis flavours.

    python3 scripts/reproduce_tables.py                  # all real examples
    python3 scripts/reproduce_tables.py --only cox3 gauss --json out.json
    python3 scripts/reproduce_tables.py --with-katsura --with-complex
"""
from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass, field

from realradical.cli import load_system
from realradical.complexcase import solve_complex
from realradical.extract import Tolerances, extract_from_moments
from realradical.sdp import SolverOptions, Status, build_problem, solve_feasible_max_rank


@dataclass
class Case:
    name: str                 # corpus entry
    orders: tuple
    mode: str = "real"


@dataclass
class Config:
    cases: list = field(default_factory=lambda: [
        Case("ex11_n1", (2, 3)),
        Case("ex11_n2", (2, 3)),
        Case("ex12", (1,)),
        Case("cox3", (3, 4)),
        Case("gauss", (2, 3)),
    ])
    trace_cap: float | None = None
    tol: Tolerances = field(default_factory=Tolerances)
    seed: int = 0


@dataclass
class Row:
    case: str
    t: int
    sdp_status: str
    ranks: tuple = ()
    full_ranks: tuple | None = None
    mon: dict | None = None
    svd: dict | None = None
    seconds: float = 0.0


def _summary(rep, res):
    if res is None:
        return None
    return {"s": rep.s, "condition": rep.condition.value, "points": len(res.points),
            "accuracy": float(res.accuracy), "comm_error": float(res.comm_error),
            "basis": res.basis.kind.value}


def run_case(case: Case, cfg: Config) -> list:
    sysm = load_system(case.name)
    rows = []
    for t in case.orders:
        start = time.perf_counter()
        opts = SolverOptions(trace_cap=cfg.trace_cap)
        if case.mode == "complex":
            out = {}
            for method in ("monomial", "svd"):
                r = solve_complex(sysm, t, opts, method, tol=cfg.tol, seed=cfg.seed)
                out[method] = r
            r = out["monomial"]
            row = Row(case.name, t, r.outcome.status.value)
            if r.report is not None:
                row.ranks, row.full_ranks = r.report.pruned.ranks, r.report.full.ranks
                row.mon = _summary(r.report, r.result)
                row.svd = _summary(out["svd"].report, out["svd"].result)
        else:
            outcome = solve_feasible_max_rank(build_problem(sysm, t), opts)
            row = Row(case.name, t, outcome.status.value)
            if outcome.status == Status.INTERIOR_POINT:
                rep, res = extract_from_moments(outcome.y, sysm, "monomial", None, cfg.tol,
                                                cfg.seed, fallback=False)
                row.ranks, row.mon = rep.ranks, _summary(rep, res)
                rep, res = extract_from_moments(outcome.y, sysm, "svd", None, cfg.tol, cfg.seed)
                row.svd = _summary(rep, res)
        row.seconds = time.perf_counter() - start
        rows.append(row)
    return rows


def _cell(d, key, spec):
    return "---" if d is None else format(d[key], spec)


def render(rows: list) -> str:
    head = ("case", "t", "ranks", "full", "s MON/SVD", "accuracy MON/SVD", "comm. error MON/SVD", "sec")
    body = []
    for r in rows:
        s = f"{_cell(r.mon, 's', '')}/{_cell(r.svd, 's', '')}"
        acc = f"{_cell(r.mon, 'accuracy', '.3g')}/{_cell(r.svd, 'accuracy', '.3g')}"
        com = f"{_cell(r.mon, 'comm_error', '.3g')}/{_cell(r.svd, 'comm_error', '.3g')}"
        ranks = " ".join(map(str, r.ranks)) or r.sdp_status
        full = " ".join(map(str, r.full_ranks or ()))
        body.append((r.case, str(r.t), ranks, full, s, acc, com, f"{r.seconds:.1f}"))
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    return "\n".join(" | ".join(x.ljust(w) for x, w in zip(line, widths)).rstrip()
                     for line in [head, *body])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", nargs="*", help="restrict to these corpus entries")
    ap.add_argument("--with-katsura", action="store_true", help="add katsura5 at t = 1..3")
    ap.add_argument("--with-complex", action="store_true", help="add philipp in complex mode")
    ap.add_argument("--trace-cap", type=float)
    ap.add_argument("--json", metavar="PATH")
    args = ap.parse_args(argv)
    cfg = Config(trace_cap=args.trace_cap)
    if args.with_katsura:
        cfg.cases.append(Case("katsura5", (1, 2, 3)))
    if args.with_complex:
        cfg.cases.append(Case("philipp", (1, 2, 3), "complex"))
    if args.only:
        cfg.cases = [c for c in cfg.cases if c.name in args.only]
    rows = [row for case in cfg.cases for row in run_case(case, cfg)]
    print(render(rows))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump([asdict(r) for r in rows], fh, indent=2)


if __name__ == "__main__":
    main()
