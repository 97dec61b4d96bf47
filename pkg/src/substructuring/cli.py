"""Command line runner.

    substructuring --sub-grid 4x4 --elems-per-sub 4 --method bddc --out report.json
    substructuring --certify-all --sub-grid 2x2 --elems-per-sub 2
    substructuring --sub-grid 4x4 --elems-per-sub 2,4,8,16 --method bddc --table sweep.csv

Giving ``--table`` switches to sweep mode, where ``--sub-grid``,
``--elems-per-sub`` and ``--scaling`` accept comma-separated lists.
Exit codes: 0 success, 1 usage error, 2 failed numerical check.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

from .experiment import METHODS, SWEEP_COLUMNS, run_experiment, sweep
from .model_problem import DIRICHLET_PRESETS, RHS_KINDS, ProblemConfig, checkerboard
from .operators import SCALINGS
from .preconditioners import Q_CHOICES

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="substructuring", description="Substructuring preconditioner laboratory.")
    p.add_argument("--sub-grid", default="2x2", help="substructure grid MxN (comma list in sweep mode)")
    p.add_argument("--elems-per-sub", default="2", help="elements per substructure side (comma list in sweep mode)")
    p.add_argument("--dirichlet", default="left", choices=sorted(DIRICHLET_PRESETS))
    p.add_argument("--coeff", default="uniform:1", help="uniform:RHO or checkerboard:RHO1,RHO2")
    p.add_argument("--scaling", default="multiplicity", help="multiplicity or stiffness (comma list in sweep mode)")
    p.add_argument("--q", default="dirichlet", choices=Q_CHOICES)
    p.add_argument("--method", action="append", default=[], choices=METHODS)
    p.add_argument("--certify-all", action="store_true")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--maxit", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rhs", default="ones", choices=RHS_KINDS)
    p.add_argument("--out", help="write the structured report (JSON) here")
    p.add_argument("--table", help="sweep mode: write comma-separated rows here")
    return p


def parse_grid(text):
    try:
        mx, my = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad sub grid {text!r}, expected MxN") from None
    return mx, my


def parse_coeff(text, grid):
    kind, _, vals = text.partition(":")
    try:
        nums = [float(v) for v in vals.split(",")] if vals else []
    except ValueError:
        raise UsageError(f"bad coefficient spec {text!r}") from None
    if kind == "uniform" and len(nums) == 1:
        return nums[0]
    if kind == "checkerboard" and len(nums) == 2:
        return checkerboard(grid, *nums)
    raise UsageError(f"bad coefficient spec {text!r}; use uniform:RHO or checkerboard:RHO1,RHO2")


def _list(text, conv=str):
    items = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return [conv(t) for t in items]
    except ValueError:
        raise UsageError(f"bad list {text!r}") from None


def make_config(args, grid, n):
    try:
        return ProblemConfig(
            sub_grid=grid,
            elems_per_sub=n,
            coefficient=parse_coeff(args.coeff, grid),
            dirichlet=args.dirichlet,
            seed_rhs=args.rhs,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _validate(config):
    if config.n_subs < 2:
        raise UsageError(f"sub grid {config.sub_grid} has no interface")


def run(args):
    grids = [parse_grid(g) for g in _list(args.sub_grid)]
    ns = _list(args.elems_per_sub, int)
    scalings = _list(args.scaling)
    if not grids or not ns or not scalings:
        raise UsageError("empty --sub-grid, --elems-per-sub or --scaling")
    bad = [s for s in scalings if s not in SCALINGS]
    if bad:
        raise UsageError(f"unknown scaling {bad[0]!r}")
    configs = [make_config(args, g, n) for g in grids for n in ns]
    for c in configs:
        _validate(c)
    if args.table:
        if not args.method:
            raise UsageError("sweep needs at least one --method")
        rows = sweep(configs, scalings, args.method, q=args.q, tol=args.tol, maxit=args.maxit)
        with open(args.table, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        failed = [r for r in rows if r["status"] not in ("ok", "fit", "spread")]
        for r in failed:
            print(f"row {r['sub_grid']} n={r['n']} {r['method']}: {r['status']}", file=sys.stderr)
        print(f"wrote {len(rows)} rows to {args.table}")
        return EXIT_CHECK if failed else EXIT_OK
    if len(configs) != 1 or len(scalings) != 1:
        raise UsageError("lists in --sub-grid/--elems-per-sub/--scaling need --table (sweep mode)")
    if not args.method and not args.certify_all:
        raise UsageError("nothing to do: give --method and/or --certify-all")
    report, failures = run_experiment(
        configs[0], scaling=scalings[0], q=args.q, methods=tuple(dict.fromkeys(args.method)),
        certify_all=args.certify_all, tol=args.tol, maxit=args.maxit,
    )
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for name in failures:
        v = report["verdicts"][name]
        print(f"FAILED {name}: measured {v['measured']:.3e} > tol {v['tol']:.1e}", file=sys.stderr)
    return EXIT_CHECK if failures else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except UsageError as exc:
        print(f"substructuring: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
