"""Distance oracle, subsets, linear-scan primitives and the brute-force oracle.

A metric space here is a distance oracle over the point ids ``0..N-1``.
Every oracle evaluation made on behalf of an algorithm run is charged to
the run's :class:`RunContext`, which is the only mutable object involved.
Subsets are plain ``int64`` numpy arrays of distinct point ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "InputError",
    "PreconditionError",
    "IterationCapError",
    "InternalError",
    "MetricSpace",
    "AlgorithmConfig",
    "RunContext",
    "MetricViolation",
    "as_subset",
    "distance",
    "distances_from",
    "kth_smallest",
    "ball_count",
    "brute_force_closest_pair",
    "validate_metric",
]


class InputError(ValueError):
    """Malformed user input: bad ids, bad files, non-metric data."""


class PreconditionError(ValueError):
    """An operation was called outside the size range it is defined for."""


class IterationCapError(RuntimeError):
    """A randomized repeat-until loop ran past the configured cap."""

    def __init__(self, where: str, cap: int):
        super().__init__(
            f"{where}: iteration cap {cap} exceeded; the supplied d is "
            f"probably below the doubling dimension of the space"
        )
        self.where = where
        self.cap = cap


class InternalError(RuntimeError):
    """A branch guard inside the algorithm is inconsistent."""


class MetricSpace:
    """Immutable distance oracle over the points ``0..size-1``.

    Subclasses implement :meth:`_pair_dists`, the elementwise distance
    between two equally long id arrays. All other access paths go
    through it, so a given pair always yields the same 64-bit value
    no matter how it was requested.
    """

    size: int

    def _pair_dists(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pair_dists(self, a, b) -> np.ndarray:
        """Uncounted elementwise distances ``dist(a[k], b[k])``."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        return self._pair_dists(a, b)

    def dist(self, i: int, j: int) -> float:
        """Uncounted single distance, for checkers and tests."""
        return float(self._pair_dists(np.array([i]), np.array([j]))[0])

    def matrix(self, subset=None) -> np.ndarray:
        """Full (uncounted) distance matrix, for small-scale checkers."""
        ids = np.arange(self.size) if subset is None else np.asarray(subset, dtype=np.int64)
        a, b = np.meshgrid(ids, ids, indexing="ij")
        return self._pair_dists(a.ravel(), b.ravel()).reshape(len(ids), len(ids))

    def __len__(self) -> int:
        return self.size


@dataclass
class AlgorithmConfig:
    """Knobs for one algorithm run.

    ``d`` bounds the doubling dimension of the whole space. With
    ``strict_constants`` the constants ``mu`` and ``c`` are derived from
    ``d`` alone and the overrides below are ignored.
    """

    d: float = 1.0
    iteration_cap: Optional[int] = None
    audit: bool = False
    strict_constants: bool = True
    mu: Optional[float] = None
    c: Optional[float] = None

    def __post_init__(self):
        if not (self.d >= 1):
            raise InputError(f"d must be >= 1, got {self.d}")
        if self.iteration_cap is not None and self.iteration_cap < 1:
            raise InputError("iteration_cap must be a positive integer")


@dataclass
class RunContext:
    """Per-invocation state: rng, oracle counters, audit log, config.

    Audit-only recomputation is charged to ``shadow_calls`` so the
    reported ``call_counter`` measures the algorithm alone.
    """

    seed: int = 0
    config: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    call_counter: int = 0
    shadow_calls: int = 0
    audit_log: list = field(default_factory=list)
    node: Optional[int] = None  # recursion node being worked on, for audit records
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)

    def charge(self, calls: int, shadow: bool = False) -> None:
        if shadow:
            self.shadow_calls += calls
        else:
            self.call_counter += calls


class MetricViolation(NamedTuple):
    kind: str  # "identity" | "positivity" | "symmetry" | "triangle"
    indices: tuple

    def __str__(self):
        return f"{self.kind} violation at {self.indices}"


def _check_id(space: MetricSpace, i) -> int:
    i = int(i)
    if not 0 <= i < space.size:
        raise InputError(f"point id {i} out of range [0, {space.size})")
    return i


def as_subset(indices: Sequence[int], size: int) -> np.ndarray:
    """Validate and freeze an ordered list of distinct point ids."""
    arr = np.array(indices, dtype=np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() >= size):
        raise InputError(f"subset ids must lie in [0, {size})")
    if np.unique(arr).size != arr.size:
        raise InputError("subset ids must be distinct")
    arr.setflags(write=False)
    return arr


def distance(space: MetricSpace, ctx: RunContext, i: int, j: int) -> float:
    """One counted oracle call."""
    i = _check_id(space, i)
    j = _check_id(space, j)
    ctx.charge(1)
    return space.dist(i, j)


def distances_from(space: MetricSpace, ctx: RunContext, subset: np.ndarray, p: int,
                   shadow: bool = False, check: bool = True) -> np.ndarray:
    """Distances from ``p`` to every point of ``subset``, in subset order.

    Costs ``len(subset)`` oracle calls (including the zero for ``p``).
    Pass ``check=False`` when the caller already knows ``p`` is a member.
    """
    p = _check_id(space, p)
    subset = np.asarray(subset, dtype=np.int64)
    if check and not np.any(subset == p):
        raise InputError(f"point {p} is not in the subset")
    ctx.charge(subset.size, shadow)
    return space._pair_dists(np.full(subset.size, p, dtype=np.int64), subset)


def kth_smallest(values, k: int) -> float:
    """k-th order statistic (1-based, duplicates counted), expected O(n)."""
    values = np.asarray(values, dtype=np.float64)
    if not 1 <= k <= values.size:
        raise InputError(f"rank {k} out of range [1, {values.size}]")
    return float(np.partition(values, k - 1)[k - 1])


def ball_count(space: MetricSpace, ctx: RunContext, subset: np.ndarray, p: int, r: float,
               dists: Optional[np.ndarray] = None) -> int:
    """``|{x in subset : dist(p, x) <= r}|``.

    Scans ``dists`` if the caller already holds the distances from ``p``;
    otherwise spends one scan of oracle calls.
    """
    if r < 0:
        raise InputError("radius must be nonnegative")
    if dists is None:
        dists = distances_from(space, ctx, subset, p)
    return int(np.count_nonzero(dists <= r))


def brute_force_closest_pair(space: MetricSpace, ctx: RunContext, subset: np.ndarray,
                             shadow: bool = False):
    """Pairwise scan; returns ``(delta, (i, j))`` with ``i < j``.

    Among pairs at the minimum distance the lexicographically smallest
    id pair is reported. Fewer than two points gives ``(inf, None)``.
    """
    subset = np.asarray(subset, dtype=np.int64)
    n = subset.size
    if n < 2:
        return math.inf, None
    ctx.charge(n * (n - 1) // 2, shadow)
    if n <= _BLOCK_ROWS:
        iu, ju = np.triu_indices(n, 1)
        return _best_pair(space, subset[iu], subset[ju])
    best = (math.inf, None)
    for i in range(n - 1):
        cand = _best_pair(space, np.full(n - 1 - i, subset[i]), subset[i + 1:])
        if cand[0] < best[0] or (cand[0] == best[0] and cand[1] < best[1]):
            best = cand
    return best


_BLOCK_ROWS = 512


def _best_pair(space, a, b):
    d = space._pair_dists(a, b)
    delta = d.min()
    hits = np.flatnonzero(d == delta)
    lo = np.minimum(a[hits], b[hits])
    hi = np.maximum(a[hits], b[hits])
    k = np.lexsort((hi, lo))[0]
    return float(delta), (int(lo[k]), int(hi[k]))


def validate_metric(matrix) -> list[MetricViolation]:
    """Check the four metric axioms exactly; empty list means a metric.

    Reports at most one witness per axiom kind. O(N^3).
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"distance matrix must be square, got shape {m.shape}")
    out = []
    diag = np.flatnonzero(np.diag(m) != 0)
    if diag.size:
        out.append(MetricViolation("identity", (int(diag[0]),)))
    off = ~np.eye(m.shape[0], dtype=bool)
    bad = np.argwhere(~(m > 0) & off)
    if bad.size:
        out.append(MetricViolation("positivity", tuple(int(v) for v in bad[0])))
    asym = np.argwhere(np.triu(m != m.T, 1))
    if asym.size:
        out.append(MetricViolation("symmetry", tuple(int(v) for v in asym[0])))
    for j in range(m.shape[0]):
        # m[i, k] <= m[i, j] + m[j, k] for every (i, k)
        viol = np.argwhere(m > m[:, j, None] + m[None, j, :])
        if viol.size:
            i, k = viol[0]
            out.append(MetricViolation("triangle", (int(i), j, int(k))))
            break
    return out
