"""Base feature selectors and rank utilities.

Four selector families share one interface: a univariate concordance
filter (uni), L1 and elastic-net penalized Cox fits with an internal
cross-validated penalty (lasso, enet), and componentwise likelihood
boosting (cboost). Each returns per-feature importance scores plus the
selected subset; sparse selectors select exactly the features with a
positive score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from ._seeds import TAG_SELECTOR_CV, child_rng
from .coxnet import (
    BoostConfig,
    FitOptions,
    componentwise_boost,
    concordance_index,
    default_lambda_grid,
    elastic_net_path,
    lambda_max,
    univariate_cindex_scores,
)
from .data import Dataset, make_folds
from .errors import FitDivergedError, NoComparablePairsError, NoEventsError, ValidationError

SPARSE_KINDS = ("lasso", "enet", "cboost")
VALID_KINDS = ("uni",) + SPARSE_KINDS


@dataclass(frozen=True)
class SelectorKind:
    """A selector family plus its tuning knobs.

    For the penalized kinds, the penalty is picked by cv_folds-fold
    cross-validation over n_lambdas log-spaced values between lambda_max
    and lambda_min_ratio * lambda_max, maximizing mean held-out
    concordance (ties favor the stronger penalty).
    """

    name: str
    enet_alpha: float = 0.5
    cv_folds: int = 3
    n_lambdas: int = 20
    lambda_min_ratio: float = 0.01
    boost: BoostConfig = field(default_factory=BoostConfig)

    def __post_init__(self):
        if self.name not in VALID_KINDS:
            raise ValidationError(f"unknown selector kind {self.name!r}")
        if not 0.0 < self.enet_alpha <= 1.0:
            raise ValidationError("enet_alpha must be in (0, 1]")
        if self.cv_folds < 2 or self.n_lambdas < 2:
            raise ValidationError("cv_folds and n_lambdas must be >= 2")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ValidationError("lambda_min_ratio must be in (0, 1)")

    @property
    def sparse(self) -> bool:
        return self.name in SPARSE_KINDS

    @property
    def label(self) -> str:
        return self.name


def UNI() -> SelectorKind:
    return SelectorKind("uni")


def LASSO() -> SelectorKind:
    return SelectorKind("lasso")


def ENET(alpha: float = 0.5) -> SelectorKind:
    return SelectorKind("enet", enet_alpha=alpha)


def CBOOST(cfg: BoostConfig | None = None) -> SelectorKind:
    return SelectorKind("cboost", boost=cfg or BoostConfig())


@dataclass(frozen=True)
class SelectionResult:
    """Importance scores over all features plus the selected subset.

    scores are non-negative and finite; selected holds sorted feature ids.
    sparse means selection came from the model itself, in which case
    selected is exactly {j : scores[j] > 0}.
    """

    scores: np.ndarray
    selected: np.ndarray
    sparse: bool

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        selected = np.asarray(self.selected, dtype=np.intp)
        if scores.ndim != 1:
            raise ValidationError("scores must be a vector")
        if not np.all(np.isfinite(scores)) or np.any(scores < 0):
            raise ValidationError("scores must be finite and >= 0")
        if selected.size and (selected.min() < 0 or selected.max() >= scores.size):
            raise ValidationError("selected ids out of range")
        selected = np.unique(selected)
        if self.sparse and not np.array_equal(selected, np.flatnonzero(scores > 0)):
            raise ValidationError("sparse selection must equal the positive-score set")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "selected", selected)
        scores.setflags(write=False)
        selected.setflags(write=False)

    @property
    def n_features(self) -> int:
        return int(self.scores.size)


def empty_selection(kind: SelectorKind, p: int) -> SelectionResult:
    """Placeholder for a failed fit: zero scores, nothing selected."""
    return SelectionResult(np.zeros(p), np.empty(0, dtype=np.intp), sparse=kind.sparse)


def _cv_lambda(kind: SelectorKind, ds: Dataset, alpha: float, seed: int) -> float:
    lam_hi = lambda_max(ds, alpha)
    if not np.isfinite(lam_hi) or lam_hi <= 0:
        return 0.0
    grid = default_lambda_grid(lam_hi, kind.n_lambdas, kind.lambda_min_ratio)
    fold_seed = int(child_rng(seed, TAG_SELECTOR_CV).integers(2**63))
    plan = make_folds(ds.n, kind.cv_folds, 1, fold_seed)
    scores = np.full((kind.cv_folds, kind.n_lambdas), np.nan)
    # CV fits only feed a concordance ranking, so they run at a loose
    # tolerance; the winning lambda is refit at the default.
    cv_opts = FitOptions(tol=1e-4)
    for _, f, tr, te in plan.iter_folds():
        train = ds.take_rows(tr)
        test = ds.take_rows(te)
        try:
            models = elastic_net_path(train, grid, alpha, opts=cv_opts)
        except (NoEventsError, FitDivergedError):
            continue
        for li, model in enumerate(models):
            try:
                scores[f, li] = concordance_index(model.predict_risk(test.X), test.time, test.event)
            except NoComparablePairsError:
                continue
    with np.errstate(invalid="ignore"):
        mean_scores = np.nanmean(scores, axis=0)
    if np.all(np.isnan(mean_scores)):
        return float(grid[kind.n_lambdas // 2])
    return float(grid[int(np.nanargmax(mean_scores))])


def _fit_penalized(kind: SelectorKind, ds: Dataset, alpha: float, seed: int) -> SelectionResult:
    lam = _cv_lambda(kind, ds, alpha, seed)
    if lam <= 0.0:
        return empty_selection(kind, ds.p)
    lam_hi = lambda_max(ds, alpha)
    grid = default_lambda_grid(lam_hi, kind.n_lambdas, kind.lambda_min_ratio)
    path = elastic_net_path(ds, grid[grid >= lam * (1 - 1e-12)], alpha)
    beta = path[-1].beta
    scores = np.abs(beta)
    return SelectionResult(scores, np.flatnonzero(scores > 0), sparse=True)


def run_selector(kind: SelectorKind, ds: Dataset, seed: int = 0) -> SelectionResult:
    """Run one selector on one dataset.

    Deterministic given (kind, ds, seed); the seed only drives internal CV
    fold shuffling and is ignored by the seed-free kinds.
    """
    if kind.name == "uni":
        scores = univariate_cindex_scores(ds)
        return SelectionResult(scores, np.arange(ds.p, dtype=np.intp), sparse=False)
    if kind.name == "lasso":
        return _fit_penalized(kind, ds, 1.0, seed)
    if kind.name == "enet":
        return _fit_penalized(kind, ds, kind.enet_alpha, seed)
    if kind.name == "cboost":
        model = componentwise_boost(ds, kind.boost)
        scores = np.abs(model.beta)
        return SelectionResult(scores, np.flatnonzero(scores > 0), sparse=True)
    raise ValidationError(f"unknown selector kind {kind.name!r}")


@dataclass(frozen=True)
class Ranking:
    """Per-feature ranks, 1 = best; ties share their mid-rank."""

    ranks: np.ndarray

    def __post_init__(self):
        ranks = np.asarray(self.ranks, dtype=np.float64)
        if ranks.ndim != 1 or ranks.size == 0:
            raise ValidationError("ranks must be a non-empty vector")
        if not np.all(np.isfinite(ranks)) or ranks.min() < 1.0 or ranks.max() > ranks.size:
            raise ValidationError("ranks must lie in [1, p]")
        ranks.setflags(write=False)
        object.__setattr__(self, "ranks", ranks)

    @property
    def n_features(self) -> int:
        return int(self.ranks.size)


def rank_features(res: SelectionResult) -> Ranking:
    """Rank features by descending score; equal scores share the mean rank.

    Unselected features of a sparse result all carry score zero and so tie
    at the worst block automatically.
    """
    return Ranking(rankdata(-res.scores, method="average"))


def apply_fixed_threshold(ranking: Ranking, fraction: float) -> np.ndarray:
    """Keep the best ceil(fraction * p) features; rank ties at the boundary stay in."""
    if not 0.0 < fraction <= 1.0:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    p = ranking.n_features
    m = math.ceil(fraction * p)
    cutoff = np.partition(ranking.ranks, m - 1)[m - 1]
    return np.flatnonzero(ranking.ranks <= cutoff)
