"""Selection-stability measures over repeated runs.

Somol & Novovicova's weighted consistency CW and its relative form CW_rel,
which normalizes CW by the exact minimum and maximum attainable for the
observed number of runs m, universe size N, and total selection mass D.
Both extremes have closed forms in (N, m, D); the test suite checks them
against exhaustive enumeration.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError


def _as_subsets(subsets: Sequence[Iterable[int]], n_features: int) -> list[np.ndarray]:
    out = []
    for s in subsets:
        arr = np.unique(np.asarray(list(s), dtype=np.intp))
        if arr.size and (arr.min() < 0 or arr.max() >= n_features):
            raise ValidationError("subset ids out of range")
        out.append(arr)
    return out


def weighted_consistency(subsets: Sequence[Iterable[int]], n_features: int) -> float:
    """CW = sum_f (F_f / D) * (F_f - 1) / (m - 1).

    F_f counts the runs selecting feature f and D = sum_f F_f. Zero when
    every selected feature was picked once; 1 when all runs agree exactly.
    All-empty runs have no selection mass and score 0.
    """
    if n_features < 1:
        raise ValidationError("n_features must be >= 1")
    sets = _as_subsets(subsets, n_features)
    m = len(sets)
    if m < 2:
        raise ValidationError("need at least two runs")
    F = np.zeros(n_features)
    for s in sets:
        F[s] += 1
    D = F.sum()
    if D == 0:
        return 0.0
    return float(np.sum((F / D) * (F - 1) / (m - 1)))


def _cw_min(N: int, m: int, D: int) -> float:
    # Spread D as evenly as possible over N features: D mod N features get
    # one extra occurrence.
    H = D % N
    return (D * D - N * (D - H) - H * H) / (N * D * (m - 1))


def _cw_max(m: int, D: int) -> float:
    # Concentrate D on as few features as possible: floor(D/m) features in
    # every run plus one partially shared feature when m does not divide D.
    H = D % m
    return (H * H + D * (m - 1) - H * m) / (D * (m - 1))


def relative_weighted_consistency(subsets: Sequence[Iterable[int]], n_features: int) -> float:
    """CW_rel: CW rescaled between the exact min and max for (N, m, D).

    1 means as consistent as any system with the same total selection mass
    could be, 0 as inconsistent. When min and max coincide every system
    attains both, so the value is defined as 1. All-empty runs score 0.
    """
    sets = _as_subsets(subsets, n_features)
    m = len(sets)
    if m < 2:
        raise ValidationError("need at least two runs")
    D = int(sum(s.size for s in sets))
    if D == 0:
        return 0.0
    cw = weighted_consistency(subsets, n_features)
    lo = _cw_min(n_features, m, D)
    hi = _cw_max(m, D)
    if math.isclose(lo, hi, rel_tol=0.0, abs_tol=1e-12):
        return 1.0
    val = (cw - lo) / (hi - lo)
    return float(min(1.0, max(0.0, val)))


def euclidean_score(mean_cindex: float, cw_rel: float) -> float:
    """Distance from the origin in the (stability, accuracy) plane.

    Both coordinates live in [0, 1], so the score lies in [0, sqrt(2)];
    bigger is better on both axes.
    """
    if not (np.isfinite(mean_cindex) and np.isfinite(cw_rel)):
        raise ValidationError("inputs must be finite")
    return float(math.hypot(mean_cindex, cw_rel))
