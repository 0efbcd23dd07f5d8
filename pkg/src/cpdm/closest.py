"""Randomized divide and conquer for the exact closest-pair distance.

Each node of size ``n >= 2(16e)^d`` finds a thin sparse annulus around a
random center, splits its points into the ball ``S1``, the annulus
``S2`` and the rest ``S3``, and recurses on ``S1+S2`` and ``S2+S3``.
Smaller nodes are solved by the pairwise scan. Because the annulus is
at least as wide as the closest-pair distance, no closest pair straddles
``S1`` and ``S3``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .annulus import AuditRecord, derive_c, sparse_sep_ann
from .metric_core import (
    AlgorithmConfig,
    InputError,
    InternalError,
    MetricSpace,
    PreconditionError,
    RunContext,
    as_subset,
    brute_force_closest_pair,
    distances_from,
)

__all__ = [
    "RunStats",
    "ClosestPairResult",
    "NodeRecord",
    "AuditReport",
    "base_threshold",
    "t_of",
    "partition",
    "closest_pair",
    "closest_pair_audited",
]


@dataclass
class RunStats:
    distance_calls: int = 0
    sepann_iterations: int = 0
    sparse_loop_iterations: int = 0
    recursion_nodes: int = 0
    max_depth: int = 0
    base_cases: int = 0
    audit_violations: int = 0

    @property
    def internal_nodes(self) -> int:
        return self.recursion_nodes - self.base_cases


@dataclass
class ClosestPairResult:
    delta: float
    pair: Optional[tuple]
    stats: RunStats

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "pair": None if self.pair is None else list(self.pair),
            "stats": dataclasses.asdict(self.stats),
        }


@dataclass
class NodeRecord:
    node: int
    depth: int
    n: int
    n_left: int
    n_right: int
    t: int
    R: float
    p: int
    sizes: tuple
    sepann_iterations: int
    loop_iterations: int

    @property
    def width(self) -> float:
        return self.R / self.t


@dataclass
class AuditReport:
    nodes: list = field(default_factory=list)
    records: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [r for r in self.records if not r.ok]

    def to_dict(self) -> dict:
        return {
            "nodes": len(self.nodes),
            "checks": len(self.records),
            "violations": [str(v) for v in self.violations],
        }


def base_threshold(d: float) -> float:
    """Nodes smaller than ``2 (16 e)^d`` go to the pairwise scan."""
    return 2 * (16 * math.e) ** d


def t_of(n: int, d: float) -> int:
    """Number of thin annuli, ``floor((n/2)^(1/d) / (16 e))``.

    Cross-checked against the equivalent ``floor((n/c)^(1/d) / 4)`` with
    ``c = 2 (4e)^d``; the two may only disagree when the unfloored value
    sits on an integer up to rounding.
    """
    if n < base_threshold(d):
        raise InternalError(f"t_of called on a base-case size n={n}, d={d}")
    raw = (n / 2) ** (1 / d) / (16 * math.e)
    alt = (n / derive_c(d, math.e)) ** (1 / d) / 4
    t = math.floor(raw)
    if t != math.floor(alt) and abs(raw - round(raw)) > 1e-9 * raw:
        raise InternalError(f"t forms disagree at n={n}, d={d}: {raw!r} vs {alt!r}")
    if t < 1:
        raise InternalError(f"t={t} < 1 at n={n}, d={d}")
    return t


def partition(space: MetricSpace, ctx: RunContext, subset: np.ndarray, p: int, R: float,
              t: int, dists: Optional[np.ndarray] = None):
    """Split ``subset`` into ``dist <= R``, ``R < dist <= (1+1/t)R`` and the rest.

    Input order is kept inside each part. Pass ``dists`` (distances from
    ``p`` in subset order) to avoid a fresh scan.
    """
    if not R > 0:
        raise PreconditionError("R must be positive")
    if t < 1:
        raise PreconditionError("t must be at least 1")
    subset = np.asarray(subset, dtype=np.int64)
    if dists is None:
        dists = distances_from(space, ctx, subset, p)
    outer = R * (1 + 1 / t)
    in_ball = dists <= R
    in_ring = ~in_ball & (dists <= outer)
    return subset[in_ball], subset[in_ring], subset[~in_ball & ~in_ring]


def _check(report, node, name, ok, detail):
    report.records.append(AuditRecord(name, bool(ok), detail, node))


def _audit_node(report, rec: NodeRecord, c: float, d: float, part_sizes):
    n, n1, n2, t = rec.n, rec.n_left, rec.n_right, rec.t
    k = rec.node
    for name, m in (("eq1", n1), ("eq2", n2)):
        _check(report, k, name, 2 <= m and m * c <= n * c - n,
               f"n={n}, size={m}, (1-1/c)n={(1 - 1 / c) * n:.6g}")
        _check(report, k, f"{name}.shrinks", m <= n - 2, f"n={n}, size={m}")
    _check(report, k, "eq3", (n1 + n2) * t <= n * t + n, f"n'+n''={n1 + n2}, n={n}, t={t}")
    if n >= 8 ** d * c:
        bound = 8 * c ** (1 / d) * n ** (1 - 1 / d)
        _check(report, k, "eq4", n / t <= bound, f"n/t={n / t:.6g}, bound={bound:.6g}")
    _check(report, k, "partition==separator", tuple(part_sizes) == tuple(rec.sizes),
           f"partition {tuple(part_sizes)} vs separator {tuple(rec.sizes)}")


def _run(space: MetricSpace, d: float, seed: int, config: AlgorithmConfig, subset=None):
    if space.size < 2:
        raise InputError("closest pair needs at least two points")
    cfg = dataclasses.replace(config, d=d)
    ctx = RunContext(seed=seed, config=cfg)
    if subset is None:
        subset = np.arange(space.size, dtype=np.int64)
    else:
        subset = as_subset(subset, space.size)
        if subset.size < 2:
            raise InputError("closest pair needs at least two points")
    stats = RunStats()
    report = AuditReport()
    threshold = base_threshold(d)
    c = derive_c(d, math.e)

    best_delta, best_pair = math.inf, None
    # explicit DFS stack; the first child is popped first so that on ties
    # the first child's witness wins, as with plain recursion
    stack = [(subset, 0)]
    while stack:
        s, depth = stack.pop()
        node = stats.recursion_nodes
        stats.recursion_nodes += 1
        stats.max_depth = max(stats.max_depth, depth)
        n = s.size
        if n < threshold:
            stats.base_cases += 1
            delta, pair = brute_force_closest_pair(space, ctx, s)
            if delta < best_delta:
                best_delta, best_pair = delta, pair
            continue
        t = t_of(n, d)
        ctx.node = node
        sep = sparse_sep_ann(space, ctx, s, d, t)
        stats.sepann_iterations += sep.sepann_iterations
        stats.sparse_loop_iterations += sep.loop_iterations
        s1, s2, s3 = partition(space, ctx, s, sep.p, sep.R, t, dists=sep.dists)
        left = np.concatenate((s1, s2))
        right = np.concatenate((s2, s3))
        if cfg.audit:
            rec = NodeRecord(node, depth, n, left.size, right.size, t, sep.R, sep.p,
                             sep.sizes, sep.sepann_iterations, sep.loop_iterations)
            report.nodes.append(rec)
            _audit_node(report, rec, c, d, (s1.size, s2.size, s3.size))
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    ctx.node = None

    if cfg.audit:
        report.records[:0] = ctx.audit_log
        for rec in report.nodes:
            _check(report, rec.node, "width", rec.width >= best_delta,
                   f"R/t={rec.width!r}, delta={best_delta!r}")
        stats.audit_violations = len(report.violations)
    stats.distance_calls = ctx.call_counter
    return ClosestPairResult(best_delta, best_pair, stats), report


def closest_pair(space: MetricSpace, d: float, seed: int = 0,
                 config: Optional[AlgorithmConfig] = None, subset=None) -> ClosestPairResult:
    """Exact closest-pair distance of ``space`` (or of ``subset``).

    ``d`` must bound the doubling dimension of the whole space; the same
    ``d`` is used at every node. The result is a deterministic function
    of ``(space, d, seed, config)``.
    """
    config = config or AlgorithmConfig(d=d)
    return _run(space, d, seed, config, subset)[0]


def closest_pair_audited(space: MetricSpace, d: float, seed: int = 0,
                         config: Optional[AlgorithmConfig] = None, subset=None):
    """Like :func:`closest_pair` with every guarantee checked at every node.

    Returns ``(result, AuditReport)``.
    """
    config = dataclasses.replace(config or AlgorithmConfig(d=d), d=d, audit=True)
    return _run(space, d, seed, config, subset)
