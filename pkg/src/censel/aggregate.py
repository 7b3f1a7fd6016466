"""Consensus rank aggregation over ensemble selector outputs.

Five aggregators: mean rank and mean weight (full consensus orderings),
robust rank aggregation (order-statistic p-values against a uniform null,
after Kolde et al.), Fagin's threshold algorithm over score lists, and
MedRank-style quorum counting over rank lists. The last three carry their
own intrinsic selected set; all ties break toward the smaller feature id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .errors import ValidationError
from .selectors import Ranking, SelectionResult


@dataclass(frozen=True)
class RankedList:
    """One replicate's output as a score-ordered access list.

    Only positive-score features appear; ids are ordered by descending
    score with ties broken by ascending id, so sequential access is
    deterministic.
    """

    ids: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.intp)
        scores = np.asarray(self.scores, dtype=np.float64)
        if ids.shape != scores.shape or ids.ndim != 1:
            raise ValidationError("ids and scores must be matching vectors")
        if np.any(scores <= 0) or not np.all(np.isfinite(scores)):
            raise ValidationError("listed scores must be finite and > 0")
        if np.any(np.diff(scores) > 0):
            raise ValidationError("scores must be non-increasing")
        if np.unique(ids).size != ids.size:
            raise ValidationError("duplicate ids in ranked list")
        ids.setflags(write=False)
        scores.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return int(self.ids.size)


def ranked_list(res: SelectionResult) -> RankedList:
    """Access list of one selection result (positive scores only)."""
    ids = np.flatnonzero(res.scores > 0)
    order = np.lexsort((ids, -res.scores[ids]))
    return RankedList(ids[order], res.scores[ids][order])


@dataclass(frozen=True)
class AggregateResult:
    """Consensus of B replicate outputs.

    order lists feature ids best-first; it covers every feature for
    mr/mw/rra and only the examined features for ta/medrank. agg_score is
    dense over the universe (NaN where the method never scored a feature);
    higher_is_better gives its orientation. selected is the method's own
    subset where one exists (rra/ta/medrank), None otherwise.
    """

    method: str
    n_features: int
    order: np.ndarray
    agg_score: np.ndarray
    higher_is_better: bool
    selected: np.ndarray | None = None
    p_values: np.ndarray | None = None
    stop_depth: int | None = None

    def oriented_scores(self) -> np.ndarray:
        """Dense scores with higher always better."""
        return self.agg_score if self.higher_is_better else -self.agg_score


def _check_rankings(rankings: Sequence[Ranking]) -> np.ndarray:
    if not rankings:
        raise ValidationError("need at least one ranking")
    p = rankings[0].n_features
    for r in rankings:
        if r.n_features != p:
            raise ValidationError("rankings cover different feature universes")
    return np.vstack([r.ranks for r in rankings])


def mean_rank(rankings: Sequence[Ranking]) -> AggregateResult:
    """Borda-style consensus: ascending mean rank across replicates."""
    R = _check_rankings(rankings)
    means = R.mean(axis=0)
    p = means.size
    order = np.lexsort((np.arange(p), means))
    return AggregateResult(
        method="mr", n_features=p, order=order, agg_score=means, higher_is_better=False
    )


def mean_weight(results: Sequence[SelectionResult]) -> AggregateResult:
    """Consensus by descending mean importance score across replicates."""
    if not results:
        raise ValidationError("need at least one result")
    p = results[0].n_features
    for r in results:
        if r.n_features != p:
            raise ValidationError("results cover different feature universes")
    means = np.vstack([r.scores for r in results]).mean(axis=0)
    order = np.lexsort((np.arange(p), -means))
    return AggregateResult(
        method="mw", n_features=p, order=order, agg_score=means, higher_is_better=True
    )


def rra(rankings: Sequence[Ranking], alpha: float = 0.05) -> AggregateResult:
    """Robust rank aggregation: order-statistic p-values under a uniform null.

    Each feature's B normalized ranks are sorted and the k-th smallest is
    compared against the Beta(k, B+1-k) null; the minimum tail probability,
    Bonferroni-corrected by B, is the feature's p-value. Selected =
    {p < alpha}, ordered by ascending p.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValidationError("alpha must be in (0, 1]")
    R = _check_rankings(rankings)
    B, p = R.shape
    normalized = R / p
    if np.any(normalized <= 0) or np.any(normalized > 1):
        raise ValidationError("ranks must lie in [1, n_features]")
    normalized = np.sort(normalized, axis=0)
    k = np.arange(1, B + 1)[:, None]
    tails = beta_dist.cdf(normalized, k, B + 1 - k)
    rho = tails.min(axis=0)
    pvals = np.minimum(1.0, rho * B)
    order = np.lexsort((np.arange(p), pvals))
    selected = order[pvals[order] < alpha]
    return AggregateResult(
        method="rra",
        n_features=p,
        order=order,
        agg_score=pvals,
        higher_is_better=False,
        selected=selected,
        p_values=pvals,
    )


def _dense_scores(lists: Sequence[RankedList], n_features: int) -> np.ndarray:
    dense = np.zeros((len(lists), n_features))
    for i, lst in enumerate(lists):
        if lst.ids.size and lst.ids.max() >= n_features:
            raise ValidationError("list ids exceed the feature universe")
        dense[i, lst.ids] = lst.scores
    return dense


def threshold_algorithm(lists: Sequence[RankedList], k: int, n_features: int) -> AggregateResult:
    """Fagin's threshold algorithm for the top k features by summed score.

    Walks all lists depth by depth (sequential access), resolves each newly
    seen feature's total with random accesses (absent = 0), and stops once
    the k-th best running total reaches the depth bound tau = sum of the
    scores just read. Output keeps every seen feature tied with the k-th
    total. stop_depth records how deep the walk went.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if not lists:
        raise ValidationError("need at least one list")
    k_eff = min(k, n_features)
    dense = _dense_scores(lists, n_features)
    totals = np.zeros(n_features)
    seen = np.zeros(n_features, dtype=bool)
    max_len = max(len(lst) for lst in lists)
    stop_depth = 0
    for d in range(max_len):
        tau = 0.0
        for li, lst in enumerate(lists):
            if d < len(lst):
                tau += lst.scores[d]
                f = lst.ids[d]
                if not seen[f]:
                    seen[f] = True
                    totals[f] = dense[:, f].sum()
        stop_depth = d + 1
        n_seen = int(seen.sum())
        if n_seen >= k_eff:
            kth = np.partition(totals[seen], n_seen - k_eff)[n_seen - k_eff]
            if kth >= tau:
                break
    seen_ids = np.flatnonzero(seen)
    if seen_ids.size == 0:
        selected = seen_ids
    elif seen_ids.size <= k_eff:
        selected = seen_ids
    else:
        vals = totals[seen_ids]
        kth = np.partition(vals, vals.size - k_eff)[vals.size - k_eff]
        selected = seen_ids[vals >= kth]
    sel_order = np.lexsort((selected, -totals[selected]))
    selected = selected[sel_order]
    order = seen_ids[np.lexsort((seen_ids, -totals[seen_ids]))]
    agg = np.full(n_features, np.nan)
    agg[seen_ids] = totals[seen_ids]
    return AggregateResult(
        method="ta",
        n_features=n_features,
        order=order,
        agg_score=agg,
        higher_is_better=True,
        selected=selected,
        stop_depth=stop_depth,
    )


def medrank(
    lists: Sequence[RankedList], k: int, quorum: float = 0.2, n_features: int | None = None
) -> AggregateResult:
    """Quorum-based top-k from ranked lists (MedRank with a soft quorum).

    Walks lists depth by depth and emits a feature the first time it has
    appeared in strictly more than quorum * B of them; within one depth,
    candidates emit in ascending id order. Stops after k emissions or when
    the lists are exhausted. The emission depth is the feature's score
    (lower is better).
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if not lists:
        raise ValidationError("need at least one list")
    if not 0.0 <= quorum < 1.0:
        raise ValidationError("quorum must be in [0, 1)")
    if n_features is None:
        n_features = max((int(lst.ids.max()) + 1 for lst in lists if len(lst)), default=0)
    B = len(lists)
    need = quorum * B
    counts = np.zeros(n_features, dtype=np.intp)
    emitted: list[int] = []
    depth_of = np.full(n_features, np.nan)
    done = np.zeros(n_features, dtype=bool)
    max_len = max(len(lst) for lst in lists)
    for d in range(max_len):
        touched = [int(lst.ids[d]) for lst in lists if d < len(lst)]
        np.add.at(counts, touched, 1)
        for f in sorted(set(touched)):
            if not done[f] and counts[f] > need:
                done[f] = True
                emitted.append(f)
                depth_of[f] = d + 1
                if len(emitted) == k:
                    break
        if len(emitted) == k:
            break
    order = np.array(emitted, dtype=np.intp)
    return AggregateResult(
        method="medrank",
        n_features=n_features,
        order=order,
        agg_score=depth_of,
        higher_is_better=False,
        selected=order.copy(),
    )
