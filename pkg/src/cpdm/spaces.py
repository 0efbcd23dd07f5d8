"""Concrete metric spaces, loaders, instance generators and the
doubling-dimension toolbox (exact covers, packing checks).

The toolbox functions work on full distance matrices and are only meant
for small spaces; they refuse anything larger than ``MAX_EXACT_POINTS``.
"""

from __future__ import annotations

import csv
import math
from typing import NamedTuple, Optional

import numpy as np

from .metric_core import (
    InputError,
    MetricSpace,
    RunContext,
    brute_force_closest_pair,
    validate_metric,
)

__all__ = [
    "EuclideanSpace",
    "ExplicitSpace",
    "LayeredExampleSpace",
    "UniformDiscreteSpace",
    "load_points_csv",
    "load_matrix_file",
    "generate_instance",
    "GENERATORS",
    "MAX_EXACT_POINTS",
    "SizeError",
    "min_cover_size",
    "doubling_dimension_exact",
    "PackingViolation",
    "packing_check",
]

MAX_EXACT_POINTS = 32


class SizeError(InputError):
    """Instance too large for an exact (exponential) computation."""


class EuclideanSpace(MetricSpace):
    """Points in R^D under the L2 norm; coordinate duplicates are rejected."""

    def __init__(self, points):
        pts = np.array(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"points must form an (N, D) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("coordinates must be finite")
        _, first, counts = np.unique(pts, axis=0, return_index=True, return_counts=True)
        if np.any(counts > 1):
            dup = int(first[np.argmax(counts > 1)])
            raise InputError(f"duplicate point: row {dup} appears {int(counts.max())} times")
        pts.setflags(write=False)
        self.points = pts
        self.size = pts.shape[0]
        self.dim = pts.shape[1]

    def _pair_dists(self, a, b):
        # same operation order for every call path keeps values bit-identical
        acc = np.zeros(a.shape, dtype=np.float64)
        for k in range(self.dim):
            diff = self.points[a, k] - self.points[b, k]
            acc += diff * diff
        return np.sqrt(acc)


class ExplicitSpace(MetricSpace):
    """A validated N x N distance matrix."""

    def __init__(self, matrix):
        m = np.array(matrix, dtype=np.float64)
        violations = validate_metric(m)
        if violations:
            raise InputError("not a metric: " + "; ".join(str(v) for v in violations))
        m.setflags(write=False)
        self._m = m
        self.size = m.shape[0]

    def _pair_dists(self, a, b):
        return self._m[a, b]

    def matrix(self, subset=None):
        if subset is None:
            return self._m.copy()
        ids = np.asarray(subset, dtype=np.int64)
        return self._m[np.ix_(ids, ids)]


class UniformDiscreteSpace(MetricSpace):
    """``n`` points, all pairwise distances 1."""

    def __init__(self, n: int):
        if n < 1:
            raise InputError("n must be positive")
        self.n = self.size = int(n)

    def _pair_dists(self, a, b):
        return np.where(a == b, 0.0, 1.0)


class LayeredExampleSpace(MetricSpace):
    """Groups ``S_1..S_n`` of ``n`` points each, plus one hub per group.

    Ids ``0..n*n-1`` are the group members (group ``g = id // n``), ids
    ``n*n..n*n+n-1`` are the hubs. A hub is at distance 1 from the
    members of its own group; every other pair of distinct points is at
    distance 2. The members alone form a uniform space of spacing 2.
    """

    def __init__(self, n: int):
        if n < 1:
            raise InputError("n must be positive")
        self.n = int(n)
        self.size = self.n * self.n + self.n

    @property
    def groups_subset(self) -> np.ndarray:
        """Ids of the union of the groups (everything except the hubs)."""
        return np.arange(self.n * self.n, dtype=np.int64)

    def hub(self, g: int) -> int:
        return self.n * self.n + g

    def _group(self, x):
        nn = self.n * self.n
        return np.where(x < nn, x // self.n, x - nn), x >= nn

    def _pair_dists(self, a, b):
        ga, hub_a = self._group(a)
        gb, hub_b = self._group(b)
        near = (ga == gb) & (hub_a != hub_b)
        return np.where(a == b, 0.0, np.where(near, 1.0, 2.0))


def load_points_csv(path) -> EuclideanSpace:
    """One point per row; the first row fixes the dimension."""
    rows = []
    try:
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or all(not cell.strip() for cell in row):
                    continue
                try:
                    vals = [float(cell) for cell in row]
                except ValueError:
                    raise InputError(f"{path}:{lineno}: non-numeric coordinate") from None
                if rows and len(vals) != len(rows[0]):
                    raise InputError(
                        f"{path}:{lineno}: expected {len(rows[0])} coordinates, got {len(vals)}")
                rows.append(vals)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: no points")
    return EuclideanSpace(rows)


def load_matrix_file(path) -> ExplicitSpace:
    """Line 1 holds N, the next N lines hold N reals each."""
    try:
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not lines:
        raise InputError(f"{path}: empty file")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise InputError(f"{path}: first line must be the integer N") from None
    if n < 1 or len(lines) - 1 != n:
        raise InputError(f"{path}: header says N={n} but found {len(lines) - 1} matrix rows")
    rows = []
    for k, ln in enumerate(lines[1:], 2):
        try:
            vals = [float(tok) for tok in ln.split()]
        except ValueError:
            raise InputError(f"{path}:{k}: non-numeric entry") from None
        if len(vals) != n:
            raise InputError(f"{path}:{k}: expected {n} entries, got {len(vals)}")
        rows.append(vals)
    return ExplicitSpace(rows)


def _distinct_rows(rng, n, dim):
    pts = rng.random((n, dim))
    while True:
        _, first = np.unique(pts, axis=0, return_index=True)
        if first.size == n:
            return pts
        dup = np.setdiff1d(np.arange(n), first)
        pts[dup] = rng.random((dup.size, dim))


def _line_uniform(rng, n, **_):
    return EuclideanSpace(_distinct_rows(rng, n, 1))


def _square_uniform(rng, n, **_):
    return EuclideanSpace(_distinct_rows(rng, n, 2))


def _clustered(rng, n, spread=0.01, **_):
    if spread <= 0:
        raise InputError("clustered: spread must be positive")
    k = math.isqrt(n - 1) + 1 if n > 1 else 1  # ceil(sqrt(n))
    centers = rng.random((k, 2))
    pts = centers[rng.integers(k, size=n)] + rng.normal(scale=spread, size=(n, 2))
    _, first = np.unique(pts, axis=0, return_index=True)
    while first.size < n:
        dup = np.setdiff1d(np.arange(n), first)
        pts[dup] = centers[rng.integers(k, size=dup.size)] + rng.normal(scale=spread, size=(dup.size, 2))
        _, first = np.unique(pts, axis=0, return_index=True)
    return EuclideanSpace(pts)


def _explicit_random(rng, n, **_):
    # integer weights keep every path sum exact, so the closure is an exact metric
    w = rng.integers(1 << 20, 1 << 21, size=(n, n)).astype(np.float64)
    m = np.triu(w, 1)
    m = m + m.T
    for k in range(n):
        np.minimum(m, m[:, k, None] + m[None, k, :], out=m)
    return ExplicitSpace(m)


GENERATORS = {
    "line-uniform": _line_uniform,
    "square-uniform": _square_uniform,
    "clustered": _clustered,
    "explicit-random": _explicit_random,
}


def generate_instance(kind: str, n: int, seed: int, **params) -> MetricSpace:
    """Seeded random instance of ``n`` points.

    The instance stream is kept apart from the algorithm's stream so a
    shared seed does not correlate the two.
    """
    if kind not in GENERATORS:
        raise InputError(f"unknown generator {kind!r}; choose from {sorted(GENERATORS)}")
    if n < 2:
        raise InputError("n must be at least 2")
    rng = np.random.default_rng([0x1A7E, int(seed)])
    return GENERATORS[kind](rng, int(n), **params)


def _small_matrix(space: MetricSpace) -> np.ndarray:
    if space.size > MAX_EXACT_POINTS:
        raise SizeError(f"exact computation refused for {space.size} > {MAX_EXACT_POINTS} points")
    return space.matrix()


def _exact_cover(masks: list[int], full: int) -> int:
    """Minimum number of ``masks`` whose union is ``full``."""
    masks = sorted(set(m & full for m in masks if m & full), key=lambda m: -bin(m).count("1"))
    masks = [m for m in masks if not any(o != m and (m | o) == o for o in masks)]

    # greedy upper bound
    best = 0
    left = full
    while left:
        left &= ~max(masks, key=lambda m: bin(m & left).count("1"))
        best += 1

    def search(uncovered, used):
        nonlocal best
        if not uncovered:
            best = min(best, used)
            return
        if used + 1 >= best:
            return
        low = uncovered & -uncovered
        for m in masks:
            if m & low:
                search(uncovered & ~m, used + 1)

    search(full, 0)
    return best


def min_cover_size(space: MetricSpace, subset, p: int, r: float, centers=None) -> int:
    """Fewest closed balls of radius ``r/2`` covering ``ball_subset(p, r)``.

    ``centers`` is the universe of allowed ball centers; it defaults to
    the whole space. Pass ``centers=subset`` for the intrinsic cover of a
    subset.
    """
    m = _small_matrix(space)
    subset = np.arange(space.size) if subset is None else np.asarray(subset, dtype=np.int64)
    centers = np.arange(space.size) if centers is None else np.asarray(centers, dtype=np.int64)
    targets = subset[m[p, subset] <= r]
    half = r / 2
    masks = []
    for c in centers:
        bits = 0
        for k, x in enumerate(targets):
            if m[c, x] <= half:
                bits |= 1 << k
        masks.append(bits)
    return _exact_cover(masks, (1 << targets.size) - 1)


def doubling_dimension_exact(space: MetricSpace, subset=None) -> float:
    """log2 of the worst minimal half-radius cover over all balls.

    With ``subset`` given, computes the dimension of the subspace, with
    covering balls centered in the subset. Only radii equal to a
    distance from the center need checking: between two such values the
    ball is fixed and the covering balls only grow.
    """
    m = _small_matrix(space)
    ids = np.arange(space.size) if subset is None else np.asarray(subset, dtype=np.int64)
    if ids.size == 1:
        return 0.0
    worst = 1
    for p in ids:
        for r in np.unique(m[p, ids]):
            if r > 0:
                worst = max(worst, min_cover_size(space, ids, int(p), float(r), centers=ids))
    return math.log2(worst)


class PackingViolation(NamedTuple):
    p: int
    radius: float
    count: int
    bound: float


def packing_check(space: MetricSpace, d: float) -> Optional[PackingViolation]:
    """Check ``|ball(p, R)| <= (4R/delta)^d`` for all ``p`` and ``R >= delta/2``.

    Per center, the tightest radii are ``delta/2`` and the distance
    values at or above it. Returns the first violation, else ``None``.
    """
    delta, _ = brute_force_closest_pair(space, RunContext(), np.arange(space.size))
    if math.isinf(delta):
        return None
    low = delta / 2
    for p in range(space.size):
        row = np.sort(space.pair_dists(np.full(space.size, p), np.arange(space.size)))
        radii = np.unique(np.concatenate(([low], row[row >= low])))
        counts = np.searchsorted(row, radii, side="right")
        bounds = (4 * radii / delta) ** d
        bad = np.flatnonzero(counts > bounds)
        if bad.size:
            k = bad[0]
            return PackingViolation(p, float(radii[k]), int(counts[k]), float(bounds[k]))
    return None
