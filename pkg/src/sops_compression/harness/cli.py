"""Command-line interface: ``sops run|scaling|exact|normalize|bounds``.

Exit status 0 means every assertion passed; 1 means an invariant or check
failed; 2 means bad input or a refused request.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from typing import List, Optional

from .. import exactsolver, normalizer
from ..async_engine import ActionRecord, write_trace_rows
from ..configuration import ConfigurationError, read_snapshot
from .experiments import ExperimentSpec, run_async, run_chain, run_scaling


def _positive(value: str) -> float:
    v = float(value)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _int_list(value: str) -> List[int]:
    return [int(x) for x in value.split(",") if x]


def _write_rows(path: str, header: List[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_run(args) -> int:
    spec = ExperimentSpec(
        mode=args.mode,
        n=args.n,
        lam=args.lam,
        steps=args.steps,
        time=args.time,
        seed=args.seed,
        snapshot_every=args.snapshot_every or max(1, args.steps // 10),
        initial=args.initial,
        out=args.out,
        engine=args.engine,
    )
    try:
        result = run_async(spec) if spec.mode == "async" else run_chain(spec)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for step, p, t, e in result.rows:
        print(f"step={step} perimeter={p} triangles={t} edges={e}")
    if result.violations:
        for v in result.violations:
            print(f"VIOLATION {v}", file=sys.stderr)
        return 1
    print(f"ok: {len(result.rows)} snapshots, all invariants hold")
    return 0


def cmd_scaling(args) -> int:
    report = run_scaling(args.ns, args.lam, args.seeds, args.ratio, args.budget, args.seed)
    table = report.table()
    header = f"# target: first step with perimeter <= max(p_min(n), floor({args.ratio} * 4 * sqrt(n))); lambda={args.lam}; budget={args.budget}"
    print(header)
    print("n,target_perimeter,seeds,censored,median_steps,doubling_ratio")
    for row in table:
        ratio = "" if row["doubling_ratio"] is None else f"{row['doubling_ratio']:.3f}"
        med = "inf" if math.isinf(row["median_steps"]) else f"{row['median_steps']:.0f}"
        print(f"{row['n']},{row['target_perimeter']},{row['seeds']},{row['censored']},{med},{ratio}")
    if math.isnan(report.slope):
        print("log-log slope: not available (censored medians)")
    else:
        print(f"log-log slope: {report.slope:.3f} (95% bootstrap band {report.slope_low:.3f} .. {report.slope_high:.3f})")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "scaling.csv"), "w", newline="") as fh:
            fh.write(header + "\n")
            w = csv.writer(fh)
            w.writerow(["n", "target_perimeter", "seeds", "censored", "median_steps", "doubling_ratio"])
            for row in table:
                w.writerow([row["n"], row["target_perimeter"], row["seeds"], row["censored"],
                            row["median_steps"], "" if row["doubling_ratio"] is None else row["doubling_ratio"]])
    return 0


def cmd_exact(args) -> int:
    try:
        space = exactsolver.enumerate_states(args.n)
    except exactsolver.EnumerationLimitError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    check = exactsolver.verify_stationary(space, args.lam)
    irreducible = exactsolver.verify_irreducible(space, args.lam)
    symmetric = exactsolver.support_symmetric(space, args.lam)
    pi = exactsolver.stationary(space, args.lam)
    forms = max(
        float(abs(exactsolver.weights(space, args.lam, "triangles") - pi).max()),
        float(abs(exactsolver.weights(space, args.lam, "edges") - pi).max()),
    )
    values = [
        ("n", args.n),
        ("lambda", args.lam),
        ("states", len(space)),
        ("Z", exactsolver.partition_function(space, args.lam)),
        ("stationary_residual", check.stationarity),
        ("detailed_balance_residual", check.detailed_balance),
        ("row_sum_error", check.row_sum),
        ("weight_form_deviation", forms),
        ("irreducible", irreducible),
        ("support_symmetric", symmetric),
    ]
    for name, v in values:
        print(f"{name}: {v}")
    ok = check.stationarity < 1e-10 and check.detailed_balance < 1e-10 and irreducible and symmetric and forms < 1e-12
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "states.txt"), "w") as fh:
            fh.write(exactsolver.dump_states(space))
        with open(os.path.join(args.out, "histogram.csv"), "w") as fh:
            fh.write(exactsolver.histogram_csv(space))
        _write_rows(os.path.join(args.out, "report.csv"), ["name", "value"], values)
    print("ok" if ok else "FAILED")
    return 0 if ok else 1


def cmd_normalize(args) -> int:
    path = args.initial
    if path is None or path == "line":
        print("error: normalize needs a snapshot file via --in/--initial", file=sys.stderr)
        return 2
    try:
        sigma = read_snapshot(path)
        st = normalizer.normalize(sigma)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except normalizer.NormalizerError as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return 1
    replayed = normalizer.replay(sigma, st.moves)
    ok = normalizer.is_line(replayed) and normalizer.check_reverse(sigma, st.moves)
    records = [ActionRecord(0.0, m.particle, "contract_head", None, m.direction, True) for m in st.moves]
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "moves.csv"), "w", newline="") as fh:
            write_trace_rows(fh, records, with_time=False)
    else:
        write_trace_rows(sys.stdout, records, with_time=False)
    if not ok:
        print("FAILED: log does not reach the line or cannot be reversed", file=sys.stderr)
        return 1
    print(f"all {len(st.moves)} moves valid")
    return 0


def cmd_bounds(args) -> int:
    try:
        rep = exactsolver.bounds_report(args.n, args.lam)
    except exactsolver.EnumerationLimitError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    print(f"Z_exact: {rep.Z_exact!r}")
    rows = [("Z_exact", rep.Z_exact)]
    for (name, applies, holds), value in zip(rep.checks(), (rep.Z_lb_sqrt2, rep.Z_lb_167, rep.Z_lb_217)):
        status = "OK" if holds else "VIOLATED"
        if not applies:
            status = "not applicable"
        print(f"bound {name}: {value!r} {status}")
        rows.append((f"Z_lb_{name}", value))
    print(f"zigzag configurations: {rep.zigzag_count} (2^(n-1) = {2 ** (args.n - 1)})")
    print(f"block-attachment configurations: {rep.attachment_count} (22^((n-1)//3) = {22 ** ((args.n - 1) // 3)})")
    saw = exactsolver.saw_bound_check(min(args.n, 6))
    for k, mk, sap in saw.rows:
        print(f"k={k}: m_k={mk} SAP({2 * k + 6})={sap}")
    ok = rep.ok and saw.ok
    for v in saw.violations:
        print(f"VIOLATION {v}", file=sys.stderr)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_rows(os.path.join(args.out, "bounds.csv"), ["name", "value"], rows)
        _write_rows(os.path.join(args.out, "saw.csv"), ["k", "m_k", "sap_2k_plus_6"], saw.rows)
    print("ok" if ok else "FAILED")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sops", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_default=None, lam_default=4.0):
        p.add_argument("--n", type=int, default=n_default)
        p.add_argument("--lambda", dest="lam", type=_positive, default=lam_default)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="simulate the chain or the asynchronous engine")
    common(p, 100)
    p.add_argument("--steps", type=int, default=1_000_000, help="chain iterations or async activations")
    p.add_argument("--time", type=float, default=None, help="async only: simulated time horizon")
    p.add_argument("--snapshot-every", type=int, default=None)
    p.add_argument("--initial", default="line", help="'line' or a snapshot file")
    p.add_argument("--mode", choices=("chain", "async"), default="chain")
    p.add_argument("--engine", choices=("fast", "python"), default="fast")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scaling", help="steps until compression versus n")
    common(p)
    p.add_argument("--ns", type=_int_list, default=[20, 40, 80])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--ratio", type=float, default=1.0, help="target perimeter is ratio * 4 sqrt(n)")
    p.add_argument("--steps", "--budget", dest="budget", type=int, default=50_000_000)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("exact", help="exact stationary and ergodicity checks")
    common(p, 3)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("normalize", help="move a snapshot onto the straight line")
    p.add_argument("--in", "--initial", dest="initial", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("bounds", help="lower bounds on the partition function")
    common(p, 6, 2.0)
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        print("error: --n must be at least 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
