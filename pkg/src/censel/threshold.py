"""Data-driven cutoffs on consensus importance scores.

Three families: keep scores above the upper quartile; split the score
density at the first minimum right of its main mode (Gaussian KDE with
Silverman's bandwidth, shrinking the bandwidth when the density looks
unimodal); and keep only features that beat the best random probe.
Each returns the kept feature ids plus a flag when no data-driven cut
could be made.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import AggregateResult
from .data import SOURCE_PROBE
from .ensemble import ProbeSet
from .errors import ValidationError

KDE_GRID_POINTS = 512
KDE_SHRINK = 0.75
KDE_MAX_SHRINKS = 10


@dataclass(frozen=True)
class ThresholdResult:
    """Kept feature ids plus a reason when thresholding fell back."""

    kept: np.ndarray
    flag: str | None = None

    def __post_init__(self):
        kept = np.asarray(self.kept, dtype=np.intp)
        kept.setflags(write=False)
        object.__setattr__(self, "kept", kept)


def _dense_oriented(agg: AggregateResult) -> np.ndarray:
    scores = agg.oriented_scores()
    if np.any(np.isnan(scores)):
        raise ValidationError(f"{agg.method} does not score every feature; cannot threshold")
    return scores


def quantile75_threshold(agg: AggregateResult) -> ThresholdResult:
    """Keep features scoring strictly above the 0.75 quantile.

    The quantile interpolates linearly at position 1 + 0.75(p-1). When all
    scores are equal nothing is strictly above, so the result is empty and
    flagged.
    """
    scores = _dense_oriented(agg)
    q = float(np.quantile(scores, 0.75))
    kept = np.flatnonzero(scores > q)
    flag = "all-scores-equal" if kept.size == 0 and np.all(scores == scores[0]) else None
    return ThresholdResult(kept, flag)


def silverman_bandwidth(scores: np.ndarray) -> float:
    """Silverman's rule of thumb: 0.9 min(sd, IQR/1.34) n^(-1/5).

    sd uses the n-1 denominator. Returns 0.0 when the spread is degenerate
    (no valid bandwidth); fewer than two scores is an error.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size < 2:
        raise ValidationError("bandwidth needs at least two scores")
    sd = float(scores.std(ddof=1))
    q75, q25 = np.percentile(scores, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if not np.isfinite(spread) or spread <= 0:
        return 0.0
    return 0.9 * spread * scores.size ** (-0.2)


def _kde_on_grid(scores: np.ndarray, h: float):
    lo = scores.min() - 3.0 * h
    hi = scores.max() + 3.0 * h
    grid = np.linspace(lo, hi, KDE_GRID_POINTS)
    z = (grid[:, None] - scores[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (scores.size * h * np.sqrt(2.0 * np.pi))
    return grid, density


def _strict_extrema(density: np.ndarray):
    inner = density[1:-1]
    maxima = np.flatnonzero((inner > density[:-2]) & (inner > density[2:])) + 1
    minima = np.flatnonzero((inner < density[:-2]) & (inner < density[2:])) + 1
    return maxima, minima


def kde_threshold(agg: AggregateResult) -> ThresholdResult:
    """Split the consensus score distribution at a density minimum.

    Evaluates a Gaussian KDE on a 512-point grid padded 3 bandwidths past
    the score range and keeps features scoring strictly above the first
    local minimum to the right of the global density maximum. While the
    density has at most one mode, or the global mode is the rightmost one,
    the bandwidth shrinks by 0.75 and the fit retries, up to 10 times;
    after that (or with no valid bandwidth at all) every feature is kept
    and the result is flagged.
    """
    scores = _dense_oriented(agg)
    h = silverman_bandwidth(scores)
    if h <= 0.0:
        return ThresholdResult(np.arange(agg.n_features, dtype=np.intp), "no-valid-bandwidth")
    for _ in range(KDE_MAX_SHRINKS + 1):
        grid, density = _kde_on_grid(scores, h)
        maxima, minima = _strict_extrema(density)
        if maxima.size >= 2:
            peak = int(np.argmax(density))
            right_minima = minima[minima > peak]
            if right_minima.size:
                cutoff = float(grid[right_minima[0]])
                return ThresholdResult(np.flatnonzero(scores > cutoff))
        h *= KDE_SHRINK
    return ThresholdResult(np.arange(agg.n_features, dtype=np.intp), "no-density-split")


def best_probe_threshold(agg: AggregateResult, probes: ProbeSet, sparse: bool) -> ThresholdResult:
    """Keep original features that outrank every random probe.

    The cut is the consensus position of the best-ranked probe; original
    features strictly above it survive, probes never do. A sparse selector
    that gave no probe a positive score (under a score-valued aggregate)
    cannot support the comparison, so every positively scored original is
    kept instead; an empty ProbeSet degrades the same way.
    """
    probe_ids = probes.probe_ids
    order = np.asarray(agg.order)
    if order.size != agg.n_features:
        raise ValidationError(f"{agg.method} does not order every feature; cannot threshold")
    is_probe = np.zeros(agg.n_features, dtype=bool)
    if probe_ids.size:
        is_probe[probe_ids] = True
    original_ids = np.flatnonzero(~is_probe)

    def escape() -> ThresholdResult:
        if agg.higher_is_better:
            kept = original_ids[agg.agg_score[original_ids] > 0]
        else:
            kept = original_ids
        return ThresholdResult(kept, "no-scored-probe")

    if probe_ids.size == 0:
        return escape()
    if sparse and agg.higher_is_better and not np.any(agg.agg_score[probe_ids] > 0):
        return escape()
    position = np.empty(agg.n_features, dtype=np.intp)
    position[order] = np.arange(agg.n_features)
    best_probe_pos = int(position[probe_ids].min())
    kept = original_ids[position[original_ids] < best_probe_pos]
    return ThresholdResult(kept)
