"""Command line: ``cpdm run | bench | verify``.

Exit codes: 0 success, 1 bad input, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys

import numpy as np

from . import harness
from .closest import closest_pair, closest_pair_audited
from .metric_core import (
    AlgorithmConfig,
    InputError,
    IterationCapError,
    PreconditionError,
    RunContext,
    brute_force_closest_pair,
)
from .spaces import GENERATORS, load_matrix_file, load_points_csv

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _real_ge1(text: str) -> float:
    v = float(text)
    if not v >= 1:
        raise argparse.ArgumentTypeError(f"d must be >= 1, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpdm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="closest pair of one input file, JSON on stdout")
    run.add_argument("--input", required=True)
    run.add_argument("--metric", choices=("euclidean", "matrix"), required=True)
    run.add_argument("--d", type=_real_ge1, required=True,
                     help="upper bound on the doubling dimension of the input")
    run.add_argument("--seed", type=_u64, default=0)
    run.add_argument("--audit", action="store_true", help="check every guarantee at every node")
    run.add_argument("--verify", action="store_true", help="compare with the pairwise scan")
    run.add_argument("--iteration-cap", type=int, default=None)

    bench = sub.add_parser("bench", help="scaling sweep, CSV output")
    bench.add_argument("--generator", choices=sorted(GENERATORS), required=True)
    bench.add_argument("--n-range", required=True, metavar="A..B")
    bench.add_argument("--n-steps", type=int, required=True)
    bench.add_argument("--seeds", type=int, required=True)
    bench.add_argument("--d", type=_real_ge1, required=True)
    bench.add_argument("--out", required=True)
    bench.add_argument("--base-seed", type=_u64, default=0)
    bench.add_argument("--audit", action="store_true")
    bench.add_argument("--verify", action="store_true")
    bench.add_argument("--wall-time", action="store_true",
                       help="fill wall_time_ns (makes the CSV machine dependent)")

    ver = sub.add_parser("verify", help="run the invariant suites")
    ver.add_argument("--trials", type=int, default=10)
    ver.add_argument("--seed", type=_u64, default=0)
    ver.add_argument("--max-n", type=int, default=2000)
    return ap


def cmd_run(args) -> int:
    loader = load_points_csv if args.metric == "euclidean" else load_matrix_file
    space = loader(args.input)
    config = AlgorithmConfig(d=args.d, audit=args.audit, iteration_cap=args.iteration_cap)
    if args.audit:
        res, report = closest_pair_audited(space, args.d, seed=args.seed, config=config)
    else:
        res, report = closest_pair(space, args.d, seed=args.seed, config=config), None
    out = {"schema": harness.SCHEMA_VERSION, **res.to_dict()}
    if report is not None:
        out["audit"] = report.to_dict()
    code = EXIT_OK
    if args.verify:
        oracle, _ = brute_force_closest_pair(space, RunContext(), np.arange(space.size))
        out["verified"] = oracle == res.delta
        out["oracle_delta"] = oracle
        if oracle != res.delta:
            code = EXIT_VERIFY
    if res.stats.audit_violations:
        code = EXIT_VERIFY
    print(json.dumps(out, sort_keys=True))
    if code != EXIT_OK:
        replay = ["cpdm", "run", "--input", args.input, "--metric", args.metric,
                  "--d", repr(args.d), "--seed", str(args.seed), "--audit", "--verify"]
        print(f"verification failed; replay: {shlex.join(replay)}", file=sys.stderr)
    return code


def cmd_bench(args) -> int:
    lo, hi = harness.parse_n_range(args.n_range)
    if args.seeds < 1:
        raise InputError("--seeds must be positive")
    sizes = harness.n_values(lo, hi, args.n_steps)
    try:
        records = harness.run_bench(args.generator, sizes, args.seeds, args.d,
                                    base_seed=args.base_seed, audit=args.audit,
                                    verify=args.verify, timing=args.wall_time)
    except harness.VerificationError as exc:
        print(f"cpdm bench: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    with open(args.out, "w", newline="") as fh:
        fh.write(harness.bench_csv(records))
    for n, v in harness.summarize(records).items():
        print(f"n={n}\tmean calls/(n log2 n)={v:.4f}", file=sys.stderr)
    return EXIT_VERIFY if any(r.audit_violations for r in records) else EXIT_OK


def cmd_verify(args) -> int:
    if args.trials < 0:
        raise InputError("--trials must be nonnegative")
    if args.max_n < 2:
        raise InputError("--max-n must be at least 2")
    if args.trials == 0:
        print("warning: --trials 0, no suites run", file=sys.stderr)
        return EXIT_OK
    tally, failures = harness.run_verify(args.trials, args.seed, args.max_n)
    for name, (passed, total) in tally.items():
        print(f"{name:14s} {passed}/{total} passed")
    for suite, case_seed, msg in failures:
        replay = shlex.join(["cpdm", "verify", "--trials", "1", "--seed", str(case_seed),
                             "--max-n", str(args.max_n)])
        print(f"FAIL [{suite}] seed={case_seed}: {msg}\n  replay: {replay}", file=sys.stderr)
    return EXIT_VERIFY if failures else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "bench": cmd_bench, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except (InputError, PreconditionError, IterationCapError) as exc:
        print(f"cpdm {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
