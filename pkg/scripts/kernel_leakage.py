"""How far the solver's numerical kernel is from containing the true roots.

For each (trace cap, gap tolerance) pair we solve the relaxation, take the
kernel of every block M_s past the rank cut and report the largest entry of
M_s(z) U over point evaluations z at the known roots.  Values above 1e-5 mean
the returned point is not yet close enough to the relative interior.

    python3 scripts/kernel_leakage.py
    python3 scripts/kernel_leakage.py --caps 1e3 none --gaps 1e-11 1e-13
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

import numpy as np

from realradical import linalg
from realradical.cli import load_system
from realradical.moment import MomentSequence, assemble_moment_matrix
from realradical.sdp import SolverOptions, build_problem, solve_feasible_max_rank


@dataclass
class Config:
    system: str = "cox3"
    t: int = 4
    roots: list = field(default_factory=lambda: [(0.0, 0.0), (1.0, 2.0)])
    caps: list = field(default_factory=lambda: [None, 1e3])
    gaps: list = field(default_factory=lambda: [1e-11, 1e-12, 1e-13])


def leakage(y, roots, t):
    out = []
    for s in range(1, t + 1):
        res = linalg.svd(assemble_moment_matrix(y, s))
        r = linalg.numerical_rank(res.singular_values)
        U = res.U[:, r:]
        worst = max(float(np.abs(assemble_moment_matrix(MomentSequence.from_point(v, s), s) @ U)
                          .max(initial=0.0)) for v in roots)
        tail = res.singular_values[r] if r < len(res.singular_values) else 0.0
        out.append((s, r, tail, worst))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--caps", nargs="*", help="trace caps ('none' = default)")
    ap.add_argument("--gaps", nargs="*", type=float)
    args = ap.parse_args(argv)
    cfg = Config()
    if args.caps:
        cfg.caps = [None if c.lower() == "none" else float(c) for c in args.caps]
    if args.gaps:
        cfg.gaps = args.gaps
    problem = build_problem(load_system(cfg.system), cfg.t)
    print("cap      gap     | s rank first-dropped-sv leak ...")
    for cap in cfg.caps:
        for gap in cfg.gaps:
            out = solve_feasible_max_rank(problem, SolverOptions(trace_cap=cap, gap_tol=gap))
            cells = "  ".join(f"{s}:{r} {tail:.1e} {w:.1e}" for s, r, tail, w in
                              leakage(out.y, cfg.roots, cfg.t))
            print(f"{str(cap):8} {gap:.0e} | {cells}  [{out.status.value}]")


if __name__ == "__main__":
    main()
