"""Benchmark records, the scaling sweep and the self-verification suites
behind the ``cpdm`` command line."""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, fields
from typing import Callable, Optional

import numpy as np

from .annulus import derive_c, good_point_fraction, sparse_sep_ann
from .closest import base_threshold, closest_pair, closest_pair_audited, t_of
from .metric_core import AlgorithmConfig, InputError, RunContext, brute_force_closest_pair
from .spaces import (
    LayeredExampleSpace,
    UniformDiscreteSpace,
    doubling_dimension_exact,
    generate_instance,
    packing_check,
)

SCHEMA_VERSION = 1


@dataclass
class BenchRecord:
    generator: str
    n: int
    d: float
    seed: int
    delta: float
    distance_calls: int
    wall_time_ns: Optional[int]
    max_depth: int
    recursion_nodes: int
    base_cases: int
    audit_violations: int


BENCH_COLUMNS = [f.name for f in fields(BenchRecord)] + ["calls_per_nlog2n"]


def parse_n_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(".."))
    except ValueError:
        raise InputError(f"--n-range must look like A..B, got {text!r}") from None
    if lo < 2 or hi < lo:
        raise InputError(f"--n-range needs 2 <= A <= B, got {text!r}")
    return lo, hi


def n_values(lo: int, hi: int, steps: int) -> list[int]:
    """``steps`` geometrically spaced sizes from ``lo`` to ``hi``."""
    if steps < 1:
        raise InputError("--n-steps must be positive")
    if steps == 1 or lo == hi:
        return [lo]
    ratio = hi / lo
    return sorted({round(lo * ratio ** (k / (steps - 1))) for k in range(steps)})


def thread_count() -> int:
    env = os.environ.get("CPDM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"CPDM_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def bench_cell(kind: str, n: int, d: float, seed: int, audit: bool = False,
               verify: bool = False, timing: bool = False) -> BenchRecord:
    space = generate_instance(kind, n, seed)
    config = AlgorithmConfig(d=d, audit=audit)
    start = time.perf_counter_ns()
    res = closest_pair(space, d, seed=seed, config=config)
    elapsed = time.perf_counter_ns() - start
    if verify:
        oracle, _ = brute_force_closest_pair(space, RunContext(), np.arange(n))
        if oracle != res.delta:
            raise VerificationError(
                f"{kind} n={n} seed={seed}: delta {res.delta!r} != oracle {oracle!r}")
    s = res.stats
    return BenchRecord(kind, n, d, seed, res.delta, s.distance_calls,
                       elapsed if timing else None, s.max_depth, s.recursion_nodes,
                       s.base_cases, s.audit_violations)


class VerificationError(RuntimeError):
    pass


def run_bench(kind: str, sizes: list[int], seeds: int, d: float, base_seed: int = 0,
              audit: bool = False, verify: bool = False, timing: bool = False,
              threads: Optional[int] = None) -> list[BenchRecord]:
    cells = [(n, base_seed + k) for n in sizes for k in range(seeds)]
    threads = threads or thread_count()

    def work(cell):
        return bench_cell(kind, cell[0], d, cell[1], audit, verify, timing)

    if threads == 1:
        return [work(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map() yields in submission order, i.e. sorted by (n, seed)
        return list(pool.map(work, cells))


def normalized_calls(calls: float, n: int) -> float:
    return calls / (n * math.log2(n))


def summarize(records: list[BenchRecord]) -> dict[int, float]:
    """Mean of ``distance_calls / (n log2 n)`` per ``n``."""
    by_n: dict[int, list[float]] = {}
    for r in records:
        by_n.setdefault(r.n, []).append(normalized_calls(r.distance_calls, r.n))
    return {n: float(np.mean(v)) for n, v in sorted(by_n.items())}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def bench_csv(records: list[BenchRecord]) -> str:
    """Per-cell rows, then one ``seed=mean`` summary row per ``n``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for r in records:
        w.writerow([_fmt(v) for v in astuple(r)] + [_fmt(normalized_calls(r.distance_calls, r.n))])
    by_n: dict[int, list[BenchRecord]] = {}
    for r in records:
        by_n.setdefault(r.n, []).append(r)
    for n, rows in sorted(by_n.items()):
        def mean(attr):
            vals = [getattr(r, attr) for r in rows]
            return None if any(v is None for v in vals) else float(np.mean(vals))
        w.writerow([rows[0].generator, n, _fmt(rows[0].d), "mean", "",
                    _fmt(mean("distance_calls")), _fmt(mean("wall_time_ns")),
                    _fmt(mean("max_depth")), _fmt(mean("recursion_nodes")),
                    _fmt(mean("base_cases")), _fmt(mean("audit_violations")),
                    _fmt(float(np.mean([normalized_calls(r.distance_calls, n) for r in rows])))])
    return buf.getvalue()


# ---------------------------------------------------------------- verify

ORACLE_KINDS = ("line-uniform", "square-uniform", "clustered", "explicit-random")
_KIND_CAPS = {"line-uniform": 5000, "square-uniform": 2000, "clustered": 2000,
              "explicit-random": 300}


def oracle_case(case_seed: int, max_n: int):
    """Instance parameters for one oracle trial: ``(kind, n, d)``."""
    rng = np.random.default_rng([0xC0DE, case_seed])
    kind = ORACLE_KINDS[case_seed % len(ORACLE_KINDS)]
    n = int(rng.integers(2, max(2, min(max_n, _KIND_CAPS[kind])) + 1))
    if kind == "line-uniform":
        d = 1.0
    elif kind == "explicit-random":
        d = float(max(1, math.ceil(math.log2(n))))
    else:
        d = 3.0
    return kind, n, d


def check_oracle_case(case_seed: int, max_n: int) -> list[str]:
    """Audited run against the pairwise scan; returns failure messages."""
    kind, n, d = oracle_case(case_seed, max_n)
    space = generate_instance(kind, n, case_seed)
    res, report = closest_pair_audited(space, d, seed=case_seed)
    oracle, _ = brute_force_closest_pair(space, RunContext(), np.arange(n))
    fails = []
    if res.delta != oracle:
        fails.append(f"oracle: {kind} n={n}: delta {res.delta!r} != brute force {oracle!r}")
    if res.pair is None or space.dist(*res.pair) != res.delta:
        fails.append(f"oracle: {kind} n={n}: witness {res.pair} does not realize delta")
    for v in report.violations:
        fails.append(f"audit: {kind} n={n}: {v}")
    return fails


def check_lemma_case(case_seed: int, max_n: int) -> list[str]:
    """Separator guarantees and good-point density on a line instance."""
    n = max(int(math.ceil(base_threshold(1))), min(max_n, 2048))
    space = generate_instance("line-uniform", n, case_seed)
    subset = np.arange(n)
    c = derive_c(1, math.e)
    fails = []
    frac = good_point_fraction(space, subset, 1)
    if frac < 1 / c:
        fails.append(f"lemma: good-point fraction {frac:.4f} < 1/c = {1 / c:.4f}")
    ctx = RunContext(seed=case_seed, config=AlgorithmConfig(d=1, audit=True))
    sparse_sep_ann(space, ctx, subset, 1, t_of(n, 1))
    fails += [f"lemma: {r}" for r in ctx.audit_log if not r.ok]
    return fails


def check_dimension_case(case_seed: int) -> list[str]:
    fails = []
    got = doubling_dimension_exact(UniformDiscreteSpace(16))
    if got != 4.0:
        fails.append(f"dimension: uniform(16) gave {got!r}, expected 4")
    layered = LayeredExampleSpace(4)
    got = doubling_dimension_exact(layered)
    if abs(got - math.log2(5)) > 1e-12:
        fails.append(f"dimension: layered(4) gave {got!r}, expected log2(5)")
    sub = doubling_dimension_exact(layered, layered.groups_subset)
    if sub != 4.0 or sub > 2 * got:
        fails.append(f"dimension: layered(4) groups gave {sub!r}, expected 4 <= 2*{got!r}")
    rng = np.random.default_rng([0xD1, case_seed])
    n = int(rng.integers(2, 33))
    line = generate_instance("line-uniform", n, case_seed)
    v = packing_check(line, 1.0)
    if v is not None:
        fails.append(f"packing: line n={n} d=1: {v}")
    v = packing_check(UniformDiscreteSpace(n), math.log2(n))
    if v is not None:
        fails.append(f"packing: uniform n={n}: {v}")
    return fails


SUITES: dict[str, Callable[[int, int], list[str]]] = {
    "oracle+audit": check_oracle_case,
    "lemmas": check_lemma_case,
    "dimension": lambda seed, max_n: check_dimension_case(seed),
}


def run_verify(trials: int, seed: int, max_n: int, out=print):
    """Run every suite ``trials`` times; trial ``k`` uses case seed ``seed + k``.

    Returns ``(tally, failures)`` where failures are
    ``(suite, case_seed, message)``.
    """
    tally = {}
    failures = []
    for name, check in SUITES.items():
        passed = 0
        for k in range(trials):
            case_seed = seed + k
            msgs = check(case_seed, max_n)
            if msgs:
                failures += [(name, case_seed, m) for m in msgs]
            else:
                passed += 1
        tally[name] = (passed, trials)
    return tally, failures
