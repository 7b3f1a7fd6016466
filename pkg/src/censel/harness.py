"""Experiment harness: the selector x aggregator x threshold grid.

Every cell is one model: run the selector ensemble inside repeated k-fold
CV, aggregate, threshold, then score the surviving subset with a ridge Cox
evaluator on the held-out fold. A cell's quality is the Euclidean distance
of (stability, mean concordance) from the origin.

Pairing rules follow the methods' semantics: rra/ta/medrank produce their
own subset and take no explicit threshold; mr/mw consensus scores are cut
by fixed fractions, the upper quartile, a density split, or random probes.
Individual (non-ensemble) baselines run each selector once per fold.

Ensembles are shared: all cells of one selector reuse the same bootstrap
runs per fold (probe cells have their own augmented runs), and every seed
derives from (config seed, stable tags), so results are a pure function of
config + data, independent of worker count or scheduling.
"""

from __future__ import annotations

import csv
import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from ._seeds import TAG_ENSEMBLE, TAG_INDIVIDUAL, TAG_RIDGE, child_rng
from .aggregate import AggregateResult, mean_rank, mean_weight, medrank, ranked_list, rra, threshold_algorithm
from .coxnet import concordance_index, fit_ridge_evaluator
from .data import Dataset, FoldPlan, apply_normalizer, fit_normalizer, impute_simple, make_folds
from .ensemble import EnsembleRun, mean_subset_length, run_ensemble
from .errors import CenselError, ValidationError
from .selectors import Ranking, SelectorKind, VALID_KINDS, apply_fixed_threshold, rank_features, run_selector
from .stability import euclidean_score, relative_weighted_consistency
from .threshold import ThresholdResult, best_probe_threshold, kde_threshold, quantile75_threshold

INTRINSIC_AGGREGATORS = ("rra", "ta", "medrank")
SCORED_AGGREGATORS = ("mr", "mw")
VALID_AGGREGATORS = SCORED_AGGREGATORS + INTRINSIC_AGGREGATORS

MAX_FAILED_FOLD_FRACTION = 0.2


@dataclass(frozen=True)
class ThresholdSpec:
    """A named cutoff applied to mr/mw consensus scores."""

    kind: str
    fraction: float | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "quantile75", "kde", "best_probe"):
            raise ValidationError(f"unknown threshold kind {self.kind!r}")
        if self.kind == "fixed":
            if self.fraction is None or not 0.0 < self.fraction <= 1.0:
                raise ValidationError("fixed threshold needs a fraction in (0, 1]")
        elif self.fraction is not None:
            raise ValidationError(f"{self.kind} takes no fraction")

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed_{self.fraction:.2f}"
        return self.kind


def parse_threshold(text: str) -> ThresholdSpec:
    """Parse "fixed:0.25" / "quantile75" / "kde" / "best_probe"."""
    if text.startswith("fixed:"):
        try:
            frac = float(text.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad fixed threshold {text!r}") from None
        return ThresholdSpec("fixed", frac)
    return ThresholdSpec(text)


@dataclass(frozen=True)
class Cell:
    """One model of the grid.

    Ensemble cells pair a selector with an aggregator; threshold is None
    exactly when the aggregator is intrinsic. Individual cells have
    aggregator None; their threshold is None for sparse selectors (the
    model's own subset) or a fixed/kde spec for the concordance filter.
    """

    selector: SelectorKind
    aggregator: str | None
    threshold: ThresholdSpec | None

    @property
    def individual(self) -> bool:
        return self.aggregator is None

    @property
    def aggregator_label(self) -> str:
        return self.aggregator if self.aggregator is not None else "individual"

    @property
    def threshold_label(self) -> str:
        if self.threshold is not None:
            return self.threshold.label
        if self.aggregator in INTRINSIC_AGGREGATORS:
            return self.aggregator
        return "intrinsic"

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.selector.label, self.aggregator_label, self.threshold_label)

    @property
    def uses_probes(self) -> bool:
        return self.threshold is not None and self.threshold.kind == "best_probe"


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid definition plus CV and ensemble settings."""

    selectors: tuple[SelectorKind, ...]
    aggregators: tuple[str, ...]
    thresholds: tuple[ThresholdSpec, ...] = ()
    B: int = 50
    k_folds: int = 5
    repeats: int = 5
    seed: int = 0
    include_individual: bool = True
    rra_alpha: float = 0.05
    medrank_quorum: float = 0.2

    def __post_init__(self):
        if not self.selectors:
            raise ValidationError("need at least one selector")
        if not self.aggregators and not self.include_individual:
            raise ValidationError("nothing to run")
        for agg in self.aggregators:
            if agg not in VALID_AGGREGATORS:
                raise ValidationError(f"unknown aggregator {agg!r}")
        if any(a in SCORED_AGGREGATORS for a in self.aggregators) and not self.thresholds:
            raise ValidationError("mr/mw aggregators need at least one threshold")
        if self.B < 1 or self.k_folds < 2 or self.repeats < 1:
            raise ValidationError("bad B / k_folds / repeats")
        if not 0.0 < self.rra_alpha <= 1.0:
            raise ValidationError("rra_alpha must be in (0, 1]")
        if not 0.0 <= self.medrank_quorum < 1.0:
            raise ValidationError("medrank_quorum must be in [0, 1)")
        labels = [k.label for k in self.selectors]
        if len(set(labels)) != len(labels):
            raise ValidationError("selector labels must be unique")
        object.__setattr__(self, "selectors", tuple(self.selectors))
        object.__setattr__(self, "aggregators", tuple(self.aggregators))
        object.__setattr__(self, "thresholds", tuple(self.thresholds))


def build_cells(cfg: ExperimentConfig) -> list[Cell]:
    """Expand the grid: intrinsic aggregators take no threshold, mr/mw take
    every configured one; individual baselines follow (sparse selectors as a
    single row, the concordance filter once per fixed threshold plus kde)."""
    cells = []
    for kind in cfg.selectors:
        for agg in cfg.aggregators:
            if agg in INTRINSIC_AGGREGATORS:
                cells.append(Cell(kind, agg, None))
            else:
                for spec in cfg.thresholds:
                    cells.append(Cell(kind, agg, spec))
    if cfg.include_individual:
        for kind in cfg.selectors:
            if kind.sparse:
                cells.append(Cell(kind, None, None))
            else:
                for spec in cfg.thresholds:
                    if spec.kind == "fixed":
                        cells.append(Cell(kind, None, spec))
                for spec in cfg.thresholds:
                    if spec.kind == "kde":
                        cells.append(Cell(kind, None, spec))
                        break
    return cells


@dataclass(frozen=True)
class ModelResult:
    """One grid cell's outcome across all CV folds.

    fold_subsets holds the kept feature names per fold (None for a failed
    fold). mean_cindex averages the non-failed folds; cw_rel measures
    subset agreement across them; distance = sqrt(c^2 + cw^2). failed means
    more than 20% of folds failed (or too few survived to score).
    """

    selector: str
    aggregator: str
    threshold: str
    mean_cindex: float
    cw_rel: float
    distance: float
    n_failed_folds: int
    failed: bool
    fold_subsets: tuple[tuple[str, ...] | None, ...]
    flags: tuple[str, ...] = ()

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.selector, self.aggregator, self.threshold)


def _kind_tag(kind: SelectorKind) -> int:
    return VALID_KINDS.index(kind.name)


def _ensemble_seed(cfg_seed: int, kind: SelectorKind, rep: int, fold: int, probes: bool) -> int:
    return int(
        child_rng(cfg_seed, TAG_ENSEMBLE, _kind_tag(kind), rep, fold, int(probes)).integers(2**63)
    )


def _individual_seed(cfg_seed: int, kind: SelectorKind, rep: int, fold: int) -> int:
    return int(child_rng(cfg_seed, TAG_INDIVIDUAL, _kind_tag(kind), rep, fold).integers(2**63))


def _ridge_seed(cfg_seed: int, cell: Cell, rep: int, fold: int) -> int:
    label = "/".join(cell.key)
    return int(
        child_rng(
            cfg_seed, TAG_RIDGE, _kind_tag(cell.selector), rep, fold, zlib.crc32(label.encode())
        ).integers(2**63)
    )


class _EnsembleView:
    """Lazy per-ensemble caches shared by all cells of one selector+fold."""

    def __init__(self, run: EnsembleRun):
        self.run = run
        self._rankings = None
        self._lists = None
        self._k = None

    @property
    def rankings(self) -> list[Ranking]:
        if self._rankings is None:
            self._rankings = [rank_features(r) for r in self.run.results]
        return self._rankings

    @property
    def lists(self):
        if self._lists is None:
            self._lists = [ranked_list(r) for r in self.run.results]
        return self._lists

    @property
    def k(self) -> int:
        if self._k is None:
            self._k = mean_subset_length(self.run)
        return self._k


def _aggregate(cell: Cell, view: _EnsembleView, cfg: ExperimentConfig) -> AggregateResult:
    if cell.aggregator == "mr":
        return mean_rank(view.rankings)
    if cell.aggregator == "mw":
        return mean_weight(list(view.run.results))
    if cell.aggregator == "rra":
        return rra(view.rankings, cfg.rra_alpha)
    if cell.aggregator == "ta":
        return threshold_algorithm(view.lists, view.k, view.run.n_features)
    if cell.aggregator == "medrank":
        return medrank(view.lists, view.k, cfg.medrank_quorum, view.run.n_features)
    raise ValidationError(f"unknown aggregator {cell.aggregator!r}")


def _consensus_ranking(agg: AggregateResult) -> Ranking:
    return Ranking(rankdata(-agg.oriented_scores(), method="average"))


def _apply_threshold(cell: Cell, agg: AggregateResult, view: _EnsembleView) -> ThresholdResult:
    spec = cell.threshold
    if spec is None:
        return ThresholdResult(np.asarray(agg.selected, dtype=np.intp))
    if spec.kind == "fixed":
        return ThresholdResult(apply_fixed_threshold(_consensus_ranking(agg), spec.fraction))
    if spec.kind == "quantile75":
        return quantile75_threshold(agg)
    if spec.kind == "kde":
        return kde_threshold(agg)
    if spec.kind == "best_probe":
        return best_probe_threshold(agg, view.run.probes, sparse=cell.selector.sparse)
    raise ValidationError(f"unknown threshold kind {spec.kind!r}")


def _evaluate_subset(train: Dataset, test: Dataset, subset: np.ndarray, seed: int) -> float:
    """Held-out concordance of a ridge model on the kept features.

    An empty subset is the null model and scores 0.5 by definition.
    """
    if subset.size == 0:
        return 0.5
    model = fit_ridge_evaluator(train.select_columns(subset), seed=seed)
    risk = model.predict_risk(test.X[:, subset])
    return concordance_index(risk, test.time, test.event)


def _fold_outputs(cfg: ExperimentConfig, ds: Dataset, plan: FoldPlan, sel_idx: int, rep: int, fold: int):
    """All cell records of one (selector, repeat, fold): list of
    (cell.key, cindex | None, subset names | None, flags)."""
    kind = cfg.selectors[sel_idx]
    cells = [c for c in build_cells(cfg) if c.selector == kind]
    tr = plan.train_indices(rep, fold)
    te = plan.test_indices(rep, fold)
    train_imp, test_imp = impute_simple(ds.take_rows(tr), ds.take_rows(te))
    norm = fit_normalizer(train_imp)
    train = apply_normalizer(norm, train_imp)
    test = apply_normalizer(norm, test_imp)

    records = []
    views: dict[bool, _EnsembleView | CenselError] = {}
    for probes in (False, True):
        if any((not c.individual) and c.uses_probes == probes for c in cells):
            seed = _ensemble_seed(cfg.seed, kind, rep, fold, probes)
            try:
                views[probes] = _EnsembleView(run_ensemble(kind, train, cfg.B, probes, seed))
            except CenselError as err:
                views[probes] = err

    individual_result = None
    individual_error = None
    if any(c.individual for c in cells):
        try:
            individual_result = run_selector(kind, train, seed=_individual_seed(cfg.seed, kind, rep, fold))
        except CenselError as err:
            individual_error = err

    original_names = np.array(ds.feature_names)
    for cell in cells:
        flags: list[str] = []
        try:
            if cell.individual:
                if individual_error is not None:
                    raise individual_error
                subset = _individual_subset(cell, individual_result, flags)
            else:
                view = views[cell.uses_probes]
                if isinstance(view, CenselError):
                    raise view
                agg = _aggregate(cell, view, cfg)
                thr = _apply_threshold(cell, agg, view)
                if thr.flag:
                    flags.append(thr.flag)
                subset = np.asarray(thr.kept, dtype=np.intp)
                # Probe columns sit past the original universe and must
                # never reach the evaluator or the stability subsets.
                subset = subset[subset < ds.p]
            cindex = _evaluate_subset(train, test, subset, _ridge_seed(cfg.seed, cell, rep, fold))
            names = tuple(sorted(original_names[subset].tolist()))
            records.append((cell.key, float(cindex), names, tuple(flags)))
        except CenselError as err:
            records.append((cell.key, None, None, (f"fold-failed: {err}",)))
    return records


def _individual_subset(cell: Cell, res, flags: list[str]) -> np.ndarray:
    if cell.threshold is None:
        return np.asarray(res.selected, dtype=np.intp)
    if cell.threshold.kind == "fixed":
        return apply_fixed_threshold(rank_features(res), cell.threshold.fraction)
    if cell.threshold.kind == "kde":
        thr = kde_threshold(mean_weight([res]))
        if thr.flag:
            flags.append(thr.flag)
        return np.asarray(thr.kept, dtype=np.intp)
    raise ValidationError(f"threshold {cell.threshold.kind!r} not valid for individual runs")


def _assemble(cfg: ExperimentConfig, ds: Dataset, per_task: dict) -> list[ModelResult]:
    cells = build_cells(cfg)
    n_folds = cfg.repeats * cfg.k_folds
    results = []
    for cell in cells:
        sel_idx = cfg.selectors.index(cell.selector)
        cindices = []
        subsets = []
        fold_subsets: list[tuple[str, ...] | None] = []
        flags: set[str] = set()
        n_failed = 0
        for rep in range(cfg.repeats):
            for fold in range(cfg.k_folds):
                rec = per_task[(sel_idx, rep, fold)][cell.key]
                cindex, names, rec_flags = rec
                flags.update(rec_flags)
                if cindex is None:
                    n_failed += 1
                    fold_subsets.append(None)
                else:
                    cindices.append(cindex)
                    subsets.append(names)
                    fold_subsets.append(names)
        failed = n_failed > MAX_FAILED_FOLD_FRACTION * n_folds
        if len(cindices) == 0 or len(subsets) < 2:
            failed = True
            flags.add("insufficient-folds")
            mean_c, cw, dist = 0.0, 0.0, 0.0
        else:
            mean_c = float(np.mean(cindices))
            name_to_id = {n: i for i, n in enumerate(ds.feature_names)}
            id_subsets = [[name_to_id[n] for n in s] for s in subsets]
            cw = relative_weighted_consistency(id_subsets, ds.p)
            dist = euclidean_score(mean_c, cw)
        results.append(
            ModelResult(
                selector=cell.key[0],
                aggregator=cell.key[1],
                threshold=cell.key[2],
                mean_cindex=mean_c,
                cw_rel=cw,
                distance=dist,
                n_failed_folds=n_failed,
                failed=failed,
                fold_subsets=tuple(fold_subsets),
                flags=tuple(sorted(flags)),
            )
        )
    return results


def _run_task(args):
    cfg, ds, plan, sel_idx, rep, fold = args
    return (sel_idx, rep, fold), dict(
        (key, (c, names, fl)) for key, c, names, fl in _fold_outputs(cfg, ds, plan, sel_idx, rep, fold)
    )


def run_cell(cell: Cell, ds: Dataset, plan: FoldPlan, cfg: ExperimentConfig) -> ModelResult:
    """Run a single grid cell across all folds (no ensemble sharing)."""
    sub = ExperimentConfig(
        selectors=(cell.selector,),
        aggregators=(cell.aggregator,) if cell.aggregator else (),
        thresholds=(cell.threshold,) if cell.threshold else (),
        B=cfg.B,
        k_folds=cfg.k_folds,
        repeats=cfg.repeats,
        seed=cfg.seed,
        include_individual=cell.individual,
        rra_alpha=cfg.rra_alpha,
        medrank_quorum=cfg.medrank_quorum,
    )
    per_task = {}
    for rep in range(cfg.repeats):
        for fold in range(cfg.k_folds):
            key, recs = _run_task((sub, ds, plan, 0, rep, fold))
            per_task[key] = recs
    for result in _assemble(sub, ds, per_task):
        if result.key == cell.key:
            return result
    raise ValidationError("cell did not produce a result")


def run_experiment(cfg: ExperimentConfig, ds: Dataset, workers: int = 1) -> list[ModelResult]:
    """Run the full grid. workers only sets process parallelism; the output
    is byte-for-byte identical for any worker count."""
    plan = make_folds(ds.n, cfg.k_folds, cfg.repeats, cfg.seed)
    tasks = [
        (cfg, ds, plan, sel_idx, rep, fold)
        for sel_idx in range(len(cfg.selectors))
        for rep in range(cfg.repeats)
        for fold in range(cfg.k_folds)
    ]
    per_task = {}
    if workers <= 1:
        for t in tasks:
            key, recs = _run_task(t)
            per_task[key] = recs
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, recs in pool.map(_run_task, tasks):
                per_task[key] = recs
    return _assemble(cfg, ds, per_task)


# ---------------------------------------------------------------------------
# Reports


def results_to_json(results: Sequence[ModelResult]) -> dict:
    return {
        "schema": 1,
        "results": [
            {
                "selector": r.selector,
                "aggregator": r.aggregator,
                "threshold": r.threshold,
                "mean_cindex": r.mean_cindex,
                "cw_rel": r.cw_rel,
                "distance": r.distance,
                "n_failed_folds": r.n_failed_folds,
                "failed": r.failed,
                "fold_subsets": [list(s) if s is not None else None for s in r.fold_subsets],
                "flags": list(r.flags),
            }
            for r in results
        ],
    }


def results_from_json(payload: dict) -> list[ModelResult]:
    if not isinstance(payload, dict) or payload.get("schema") != 1 or "results" not in payload:
        raise ValidationError("not a results document")
    out = []
    for row in payload["results"]:
        out.append(
            ModelResult(
                selector=row["selector"],
                aggregator=row["aggregator"],
                threshold=row["threshold"],
                mean_cindex=float(row["mean_cindex"]),
                cw_rel=float(row["cw_rel"]),
                distance=float(row["distance"]),
                n_failed_folds=int(row["n_failed_folds"]),
                failed=bool(row["failed"]),
                fold_subsets=tuple(
                    tuple(s) if s is not None else None for s in row["fold_subsets"]
                ),
                flags=tuple(row["flags"]),
            )
        )
    return out


CSV_COLUMNS = ("selector", "aggregator", "threshold", "mean_cindex", "cw_rel", "distance", "n_failed_folds")


def emit_report(results: Sequence[ModelResult], csv_path, json_path) -> None:
    """Write the summary CSV and the full JSON document.

    Both are deterministic byte-for-byte for identical results: floats use
    repr and JSON keys are sorted.
    """
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.selector,
                    r.aggregator,
                    r.threshold,
                    repr(r.mean_cindex),
                    repr(r.cw_rel),
                    repr(r.distance),
                    r.n_failed_folds,
                ]
            )
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(results_to_json(results), fh, indent=1, sort_keys=True)
        fh.write("\n")


def rank_thresholds(results: Sequence[ModelResult]):
    """Mean distance per threshold over the ensemble cells, best first.

    Individual baselines are excluded; intrinsic aggregators count under
    their own name. Returns (threshold, mean_distance, n_cells) rows.
    """
    groups: dict[str, list[float]] = {}
    for r in results:
        if r.aggregator == "individual":
            continue
        groups.setdefault(r.threshold, []).append(r.distance)
    rows = [(label, float(np.mean(vals)), len(vals)) for label, vals in groups.items()]
    rows.sort(key=lambda row: (-row[1], row[0]))
    return rows


@dataclass(frozen=True)
class ConsensusReport:
    """Features selected by most of the best models.

    counts maps feature name -> number of top models whose majority fold
    subset contains it; features holds the qualifiers in descending count
    order. short_field is True when fewer than top_t models were available.
    """

    features: tuple[str, ...]
    counts: dict[str, int] = field(default_factory=dict)
    model_keys: tuple[tuple[str, str, str], ...] = ()
    short_field: bool = False


def consensus_features(results: Sequence[ModelResult], top_t: int = 10, freq: float = 0.8) -> ConsensusReport:
    """Features present in >= freq of the top_t models by distance.

    A model "selects" a feature when it appears in more than half of the
    model's successful fold subsets.
    """
    if top_t < 1 or not 0.0 < freq <= 1.0:
        raise ValidationError("bad top_t or freq")
    scored = [r for r in results if not r.failed]
    scored.sort(key=lambda r: (-r.distance, r.key))
    top = scored[:top_t]
    short = len(top) < top_t
    counts: dict[str, int] = {}
    for r in top:
        ok = [s for s in r.fold_subsets if s is not None]
        if not ok:
            continue
        tally: dict[str, int] = {}
        for s in ok:
            for name in s:
                tally[name] = tally.get(name, 0) + 1
        members = {name for name, c in tally.items() if c > 0.5 * len(ok)}
        for name in members:
            counts[name] = counts.get(name, 0) + 1
    need = freq * len(top) - 1e-9
    features = sorted((n for n, c in counts.items() if c >= need), key=lambda n: (-counts[n], n))
    return ConsensusReport(
        features=tuple(features),
        counts=counts,
        model_keys=tuple(r.key for r in top),
        short_field=short,
    )


# ---------------------------------------------------------------------------
# Scatter plot (hand-rolled SVG, one marker per cell)

_MARKER_COLORS = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


def _marker_svg(x: float, y: float, aggregator: str, color: str, title: str) -> str:
    t = f"<title>{title}</title>"
    if aggregator == "mr":
        return f'<circle class="marker" cx="{x:.2f}" cy="{y:.2f}" r="5" fill="{color}">{t}</circle>'
    if aggregator == "mw":
        return (
            f'<rect class="marker" x="{x - 4.5:.2f}" y="{y - 4.5:.2f}" width="9" height="9" '
            f'fill="{color}">{t}</rect>'
        )
    if aggregator == "rra":
        pts = f"{x:.2f},{y - 6:.2f} {x + 6:.2f},{y:.2f} {x:.2f},{y + 6:.2f} {x - 6:.2f},{y:.2f}"
        return f'<polygon class="marker" points="{pts}" fill="{color}">{t}</polygon>'
    if aggregator == "ta":
        pts = f"{x:.2f},{y - 6:.2f} {x + 5.5:.2f},{y + 4.5:.2f} {x - 5.5:.2f},{y + 4.5:.2f}"
        return f'<polygon class="marker" points="{pts}" fill="{color}">{t}</polygon>'
    if aggregator == "medrank":
        pts = f"{x:.2f},{y + 6:.2f} {x + 5.5:.2f},{y - 4.5:.2f} {x - 5.5:.2f},{y - 4.5:.2f}"
        return f'<polygon class="marker" points="{pts}" fill="{color}">{t}</polygon>'
    # individual baseline: five-point star
    pts = []
    for i in range(10):
        r = 6.5 if i % 2 == 0 else 2.6
        ang = -np.pi / 2 + i * np.pi / 5
        pts.append(f"{x + r * np.cos(ang):.2f},{y + r * np.sin(ang):.2f}")
    return f'<polygon class="marker" points="{" ".join(pts)}" fill="{color}">{t}</polygon>'


def emit_scatter(results: Sequence[ModelResult], path) -> None:
    """Stability-vs-concordance scatter as a standalone SVG.

    One element with class "marker" per cell; shape encodes the aggregator
    (star = individual baseline), fill color the threshold.
    """
    width, height = 640, 480
    ml, mr_, mt, mb = 60, 160, 20, 45
    px = lambda v: ml + v * (width - ml - mr_)
    py = lambda v: height - mb - v * (height - mt - mb)

    labels = sorted({r.threshold for r in results})
    color_of = {lab: _MARKER_COLORS[i % len(_MARKER_COLORS)] for i, lab in enumerate(labels)}

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<line x1="{px(v):.1f}" y1="{py(0):.1f}" x2="{px(v):.1f}" y2="{py(0) + 4:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(v):.1f}" y="{py(0) + 16:.1f}" font-size="10" text-anchor="middle">{v:g}</text>'
        )
        parts.append(
            f'<line x1="{px(0):.1f}" y1="{py(v):.1f}" x2="{px(0) - 4:.1f}" y2="{py(v):.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(0) - 6:.1f}" y="{py(v) + 3:.1f}" font-size="10" text-anchor="end">{v:g}</text>'
        )
    parts.append(
        f'<line x1="{px(0):.1f}" y1="{py(0):.1f}" x2="{px(1):.1f}" y2="{py(0):.1f}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{px(0):.1f}" y1="{py(0):.1f}" x2="{px(0):.1f}" y2="{py(1):.1f}" stroke="black"/>'
    )
    parts.append(
        f'<text x="{(px(0) + px(1)) / 2:.1f}" y="{height - 8}" font-size="12" '
        f'text-anchor="middle">relative weighted consistency</text>'
    )
    parts.append(
        f'<text x="14" y="{(py(0) + py(1)) / 2:.1f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {(py(0) + py(1)) / 2:.1f})">mean C-index</text>'
    )
    for r in results:
        x = px(min(max(r.cw_rel, 0.0), 1.0))
        y = py(min(max(r.mean_cindex, 0.0), 1.0))
        title = f"{r.selector} / {r.aggregator} / {r.threshold}"
        parts.append(_marker_svg(x, y, r.aggregator, color_of[r.threshold], title))
    ly = mt + 10
    for lab in labels:
        parts.append(f'<circle cx="{width - mr_ + 14}" cy="{ly}" r="5" fill="{color_of[lab]}"/>')
        parts.append(
            f'<text x="{width - mr_ + 24}" y="{ly + 3}" font-size="10">{lab}</text>'
        )
        ly += 16
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
