"""Randomized separators: a separating ball (SepAnn) and its refinement
into a thin, sparse annulus (SparseSepAnn).

Both routines draw from ``ctx.rng`` and charge their oracle calls to
``ctx``. With ``ctx.config.audit`` set they re-scan the chosen center on
the shadow counter and append an :class:`AuditRecord` per guarantee.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .metric_core import (
    IterationCapError,
    MetricSpace,
    PreconditionError,
    RunContext,
    distances_from,
    kth_smallest,
)

__all__ = [
    "AuditRecord",
    "SepAnnResult",
    "SeparatorResult",
    "derive_c",
    "ceil_div_real",
    "sep_ann",
    "radii_schedule",
    "annulus_index",
    "annulus_indices",
    "sparse_sep_ann",
    "good_point_fraction",
    "INSIDE",
    "OUTSIDE",
]

INSIDE = "inside"
OUTSIDE = "outside"

# R_t may exceed e*R' by rounding in the repeated products
_RT_SLACK = 4 * np.finfo(float).eps


@dataclass
class AuditRecord:
    check: str
    ok: bool
    detail: str
    node: Optional[int] = None

    def __str__(self):
        where = "" if self.node is None else f"node {self.node}: "
        return f"{where}{self.check} {'ok' if self.ok else 'VIOLATED'} ({self.detail})"


@dataclass
class SepAnnResult:
    p: int
    R_prime: float
    iterations: int
    dists: np.ndarray = field(repr=False)


@dataclass
class SeparatorResult:
    p: int
    R: float
    t: int
    sizes: tuple
    loop_iterations: int
    sepann_iterations: int
    R_prime: float
    outer: float
    dists: np.ndarray = field(repr=False)


def derive_c(d: float, mu: float) -> float:
    """Ball-size constant for the separating-ball search.

    ``2 (4 mu)^d`` when ``log2(4 mu)`` is fractional, otherwise the
    unreduced ``2 (8 mu)^d``.
    """
    if math.log2(4 * mu).is_integer():
        return 2 * (8 * mu) ** d
    return 2 * (4 * mu) ** d


def ceil_div_real(n: int, c: float) -> int:
    """Smallest integer ``k`` with ``k * c >= n``."""
    k = max(1, math.ceil(n / c))
    while k > 1 and (k - 1) * c >= n:
        k -= 1
    while k * c < n:
        k += 1
    return k


def _record(ctx, check, ok, detail):
    ctx.audit_log.append(AuditRecord(check, bool(ok), detail, getattr(ctx, "node", None)))


def _constants(ctx: RunContext) -> tuple[float, float]:
    cfg = ctx.config
    if cfg.strict_constants:
        return math.e, derive_c(cfg.d, math.e)
    mu = math.e if cfg.mu is None else cfg.mu
    c = derive_c(cfg.d, mu) if cfg.c is None else cfg.c
    return mu, c


def sep_ann(space: MetricSpace, ctx: RunContext, subset: np.ndarray, d: float,
            mu: float = math.e, c: Optional[float] = None) -> SepAnnResult:
    """Find ``p`` and ``R'`` with ``|ball(p,R')| >= n/c`` and ``|ball(p,mu R')| <= n/2``.

    Repeats: draw ``p`` uniformly from ``subset``, take ``R_p`` as the
    ``ceil(n/c)``-th smallest distance from ``p`` (``p`` included), stop
    once the ball of radius ``mu * R_p`` holds at most half the points.
    """
    if c is None:
        c = derive_c(d, mu)
    n = len(subset)
    if n < c + 1:
        raise PreconditionError(f"sep_ann needs n >= c + 1 = {c + 1:.6g}, got n = {n}")
    k = ceil_div_real(n, c)
    cap = ctx.config.iteration_cap
    iterations = 0
    while True:
        if cap is not None and iterations >= cap:
            raise IterationCapError("sep_ann", cap)
        iterations += 1
        p = int(subset[ctx.rng.integers(n)])
        dists = distances_from(space, ctx, subset, p, check=False)
        r_p = kth_smallest(dists, k)
        threshold = mu * r_p
        if 2 * np.count_nonzero(dists <= threshold) <= n:
            break
    if ctx.config.audit:
        shadow = distances_from(space, ctx, subset, p, shadow=True, check=False)
        inner = int(np.count_nonzero(shadow <= r_p))
        outer = int(np.count_nonzero(shadow <= threshold))
        _record(ctx, "sepann.ball>=n/c", inner * c >= n and r_p > 0,
                f"|ball(p,R')|={inner}, n={n}, c={c:.6g}, R'={r_p!r}")
        _record(ctx, "sepann.ball(mu)<=n/2", 2 * outer <= n,
                f"|ball(p,mu R')|={outer}, n={n}")
    return SepAnnResult(p, r_p, iterations, dists)


def radii_schedule(R_prime: float, t: int) -> list[float]:
    """``[R_0, ..., R_t]`` with ``R_i = (1 + 1/t)^i R'``.

    Built by repeated multiplication with the single factor ``1 + 1/t``,
    so ``R_i == R_{i-1} * (1 + 1/t)`` holds bit-exactly.
    """
    if not R_prime > 0:
        raise PreconditionError("R_prime must be positive")
    if t < 1:
        raise PreconditionError("t must be at least 1")
    factor = 1 + 1 / t
    radii = [float(R_prime)]
    for _ in range(t):
        radii.append(radii[-1] * factor)
    return radii


def annulus_index(dist_px: float, radii: list[float]):
    """``"inside"`` for ``dist <= R_0``, ``"outside"`` beyond ``R_t``,
    else the ``j`` with ``R_{j-1} < dist <= R_j``."""
    j = bisect.bisect_left(radii, dist_px)
    if j == 0:
        return INSIDE
    if j == len(radii):
        return OUTSIDE
    return j


def annulus_indices(dists: np.ndarray, radii) -> np.ndarray:
    """Vectorized :func:`annulus_index`: 0 inside, 1..t annuli, t+1 outside."""
    return np.searchsorted(np.asarray(radii), dists, side="left")


def sparse_sep_ann(space: MetricSpace, ctx: RunContext, subset: np.ndarray, d: float,
                   t: int) -> SeparatorResult:
    """Thin separating annulus around a random good center.

    Runs :func:`sep_ann` with ``mu = e`` (and ``c = 2(4e)^d`` under
    strict constants), slices ``(R', R_t]`` into ``t`` annuli by the
    radii schedule, then draws a uniform annulus index until the drawn
    annulus holds at most ``n/t`` points. Returns ``R = R_{i-1}``.
    """
    if t < 1:
        raise PreconditionError("t must be at least 1")
    mu, c = _constants(ctx)
    n = len(subset)
    sep = sep_ann(space, ctx, subset, d, mu, c)
    radii = radii_schedule(sep.R_prime, t)
    dists = sep.dists
    cap = ctx.config.iteration_cap
    loops = 0
    while True:
        if cap is not None and loops >= cap:
            raise IterationCapError("sparse_sep_ann", cap)
        loops += 1
        i = int(ctx.rng.integers(1, t + 1))
        s = int(np.count_nonzero((dists > radii[i - 1]) & (dists <= radii[i])))
        if s * t <= n:
            break
    R, outer = radii[i - 1], radii[i]
    n1 = int(np.count_nonzero(dists <= R))
    sizes = (n1, s, n - n1 - s)
    if ctx.config.audit:
        _audit_separator(space, ctx, subset, sep, radii, R, outer, t, c)
    return SeparatorResult(sep.p, R, t, sizes, loops, sep.iterations, sep.R_prime, outer, dists)


def _audit_separator(space, ctx, subset, sep, radii, R, outer, t, c):
    n = len(subset)
    shadow = distances_from(space, ctx, subset, sep.p, shadow=True, check=False)
    inner = int(np.count_nonzero(shadow <= R))
    ring = int(np.count_nonzero((shadow > R) & (shadow <= outer)))
    beyond = n - int(np.count_nonzero(shadow <= outer))
    _record(ctx, "sparse.ball>=n/c", inner * c >= n, f"|ball(p,R)|={inner}, n={n}, c={c:.6g}")
    _record(ctx, "sparse.annulus<=n/t", ring * t <= n, f"|annulus|={ring}, n={n}, t={t}")
    _record(ctx, "sparse.outside>=n/2", 2 * beyond >= n, f"|outside|={beyond}, n={n}")
    counts = np.bincount(annulus_indices(shadow, radii), minlength=t + 2)
    sparse_rings = int(np.count_nonzero(counts[1:t + 1] * t <= n))
    _record(ctx, "sparse.markov", 2 * sparse_rings >= t,
            f"{sparse_rings} of {t} annuli hold <= n/t points")
    _record(ctx, "sparse.R_t<=eR'", radii[-1] <= math.e * sep.R_prime * (1 + _RT_SLACK),
            f"R_t={radii[-1]!r}, e*R'={math.e * sep.R_prime!r}")


def good_point_fraction(space: MetricSpace, subset, d: float, mu: float = math.e,
                        c: Optional[float] = None) -> float:
    """Exhaustive fraction of centers ``p`` with ``|ball(p, mu R_p)| <= n/2``.

    Uncounted; uses the full distance matrix of ``subset`` in one block
    per row, so keep ``subset`` to a few thousand points.
    """
    subset = np.asarray(subset, dtype=np.int64)
    if c is None:
        c = derive_c(d, mu)
    n = subset.size
    k = ceil_div_real(n, c)
    good = 0
    for p in subset:
        row = space.pair_dists(np.full(n, p), subset)
        r_p = np.partition(row, k - 1)[k - 1]
        good += 2 * np.count_nonzero(row <= mu * r_p) <= n
    return good / n
