"""Survival dataset model and data preparation.

Covers CSV ingestion with type inference and one-hot encoding, train-fold
normalization and simple imputation, repeated k-fold plans, and a synthetic
generator with exponential event times and a calibrated censoring rate.

Missing values are represented as NaN in the feature matrix; the CSV token
for them is "NA". Outcome columns (time, event) may never be missing.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from ._seeds import TAG_FOLDS, TAG_SYNTH, child_rng
from .errors import ParseError, ValidationError

MISSING = "NA"

KIND_CONTINUOUS = "continuous"
KIND_BOOLEAN = "boolean"

SOURCE_ORIGINAL = "original"
SOURCE_ONEHOT = "onehot"
SOURCE_PROBE = "probe"

# A categorical level is "rare" below this count and gets merged into an
# "other" level, but only when at least one level is not rare (merging
# everything would erase the feature).
RARE_LEVEL_MIN = 5


@dataclass(frozen=True)
class FeatureMeta:
    """Description of one column of the encoded feature matrix.

    kind is the column's value domain after encoding (continuous or 0/1).
    source records where the column came from: an original input column, a
    one-hot indicator derived from a categorical column (parent = that
    column, level = the indicated level), or a permutation probe
    (parent = the column it shadows).
    """

    name: str
    kind: str
    source: str = SOURCE_ORIGINAL
    parent: str | None = None
    level: str | None = None
    constant: bool = False

    def __post_init__(self):
        if self.kind not in (KIND_CONTINUOUS, KIND_BOOLEAN):
            raise ValidationError(f"unknown feature kind {self.kind!r}")
        if self.source not in (SOURCE_ORIGINAL, SOURCE_ONEHOT, SOURCE_PROBE):
            raise ValidationError(f"unknown feature source {self.source!r}")
        if self.source != SOURCE_ORIGINAL and self.parent is None:
            raise ValidationError(f"{self.source} column {self.name!r} needs a parent")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus right-censored outcomes.

    X is (n, p) float64; NaN marks a missing value prior to imputation.
    time is (n,) strictly positive; event is (n,) bool (True = observed).
    Rows of X and outcome entries travel together under any row selection.
    Instances are immutable; transforms return new objects.
    """

    X: np.ndarray
    meta: tuple[FeatureMeta, ...]
    time: np.ndarray
    event: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        time = np.asarray(self.time, dtype=np.float64)
        event = np.asarray(self.event, dtype=bool)
        if X.ndim != 2:
            raise ValidationError("X must be 2-d")
        n, p = X.shape
        if n < 1:
            raise ValidationError("dataset needs at least one row")
        if len(self.meta) != p:
            raise ValidationError(f"meta has {len(self.meta)} entries for {p} columns")
        if time.shape != (n,) or event.shape != (n,):
            raise ValidationError("outcome arrays must match the number of rows")
        if not np.all(np.isfinite(time)) or np.any(time <= 0):
            raise ValidationError("all survival times must be finite and > 0")
        names = [m.name for m in self.meta]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate feature names")
        for arr in (X, time, event):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "event", event)
        object.__setattr__(self, "meta", tuple(self.meta))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.meta)

    @property
    def n_events(self) -> int:
        return int(self.event.sum())

    @property
    def censoring_rate(self) -> float:
        return 1.0 - self.event.mean()

    def take_rows(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.meta, self.time[idx], self.event[idx])

    def select_columns(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[:, idx], tuple(self.meta[j] for j in idx), self.time, self.event)

    def append_columns(self, cols: np.ndarray, metas: Sequence[FeatureMeta]) -> "Dataset":
        cols = np.asarray(cols, dtype=np.float64)
        if cols.ndim == 1:
            cols = cols[:, None]
        return Dataset(np.hstack([self.X, cols]), self.meta + tuple(metas), self.time, self.event)


# ---------------------------------------------------------------------------
# CSV ingestion


def _parse_float(token: str) -> float | None:
    try:
        return float(token)
    except ValueError:
        return None


def _infer_column(name: str, raw: list[str]):
    """Classify one raw column and return (kind, values-or-levels).

    Numeric columns whose non-missing values are all 0/1 (or true/false
    strings) become boolean; other numeric columns continuous; anything
    else categorical, returned as the raw string list for later encoding.
    """
    present = [tok for tok in raw if tok != MISSING]
    as_float = [_parse_float(tok) for tok in present]
    if present and all(v is not None for v in as_float):
        vals = np.array([float(v) if (v := _parse_float(tok)) is not None else np.nan for tok in raw])
        nonmiss = vals[~np.isnan(vals)]
        if np.all(np.isin(nonmiss, (0.0, 1.0))):
            return KIND_BOOLEAN, vals
        return KIND_CONTINUOUS, vals
    lowered = {tok.lower() for tok in present}
    if present and lowered <= {"true", "false"}:
        vals = np.array([np.nan if tok == MISSING else float(tok.lower() == "true") for tok in raw])
        return KIND_BOOLEAN, vals
    return "categorical", raw


def _encode_categorical(name: str, raw: list[str]):
    """One-hot encode a categorical column, dropping a reference level.

    Rare levels (< RARE_LEVEL_MIN occurrences) are merged into "other"
    unless every level is rare. The reference (dropped) level is the most
    frequent one, ties broken lexicographically. Missing rows get NaN in
    every derived indicator column.
    """
    tokens = [tok if tok == MISSING else tok for tok in raw]
    counts: dict[str, int] = {}
    for tok in tokens:
        if tok != MISSING:
            counts[tok] = counts.get(tok, 0) + 1
    if not counts:
        raise ParseError(f"column {name!r} has no observed values")
    if any(c >= RARE_LEVEL_MIN for c in counts.values()):
        mapped = {lv: (lv if c >= RARE_LEVEL_MIN else "other") for lv, c in counts.items()}
    else:
        mapped = {lv: lv for lv in counts}
    merged_counts: dict[str, int] = {}
    for lv, c in counts.items():
        merged_counts[mapped[lv]] = merged_counts.get(mapped[lv], 0) + c
    reference = max(sorted(merged_counts), key=lambda lv: merged_counts[lv])
    kept_levels = [lv for lv in sorted(merged_counts) if lv != reference]

    cols = []
    metas = []
    for lv in kept_levels:
        col = np.array(
            [np.nan if tok == MISSING else float(mapped[tok] == lv) for tok in tokens]
        )
        cols.append(col)
        metas.append(
            FeatureMeta(
                name=f"{name}={lv}",
                kind=KIND_BOOLEAN,
                source=SOURCE_ONEHOT,
                parent=name,
                level=lv,
                constant=_is_constant(col),
            )
        )
    return cols, metas


def _is_constant(col: np.ndarray) -> bool:
    vals = col[~np.isnan(col)]
    return vals.size > 0 and bool(np.all(vals == vals[0]))


def load_csv(path, time_col: str = "time", event_col: str = "event") -> Dataset:
    """Load a survival dataset from a UTF-8, comma-separated, headered CSV.

    "NA" marks a missing feature value. Outcome columns must be present in
    every row: time a positive real, event 0 or 1. Errors carry 1-based
    file line numbers (the header is line 1).
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append((lineno, row))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    for col in (time_col, event_col):
        if col not in header:
            raise ParseError(f"{path}: missing required column {col!r}")
    t_idx = header.index(time_col)
    e_idx = header.index(event_col)

    time = np.empty(len(rows))
    event = np.empty(len(rows), dtype=bool)
    for i, (lineno, row) in enumerate(rows):
        t = _parse_float(row[t_idx])
        if t is None:
            raise ParseError(f"{path}: line {lineno}: bad time value {row[t_idx]!r}")
        if not math.isfinite(t) or t <= 0:
            raise ValidationError(f"{path}: line {lineno}: time must be > 0, got {row[t_idx]!r}")
        e = _parse_float(row[e_idx])
        if e is None or e not in (0.0, 1.0):
            raise ParseError(f"{path}: line {lineno}: event must be 0 or 1, got {row[e_idx]!r}")
        time[i] = t
        event[i] = bool(e)

    cols = []
    metas = []
    for j, name in enumerate(header):
        if j in (t_idx, e_idx):
            continue
        raw = [row[j] for _, row in rows]
        kind, vals = _infer_column(name, raw)
        if kind == "categorical":
            ccols, cmetas = _encode_categorical(name, raw)
            cols.extend(ccols)
            metas.extend(cmetas)
        else:
            cols.append(vals)
            metas.append(FeatureMeta(name=name, kind=kind, constant=_is_constant(vals)))
    if not cols:
        raise ParseError(f"{path}: no feature columns")
    X = np.column_stack(cols)
    return Dataset(X, tuple(metas), time, event)


def write_csv(ds: Dataset, path) -> None:
    """Write a dataset as CSV (NaN -> "NA", floats at full precision).

    Uses %.17g so a load_csv round trip reproduces the matrix to 1e-12
    (in fact exactly). One-hot/probe provenance is not persisted; columns
    reload as plain features with the same values.
    """

    def fmt(v: float) -> str:
        if math.isnan(v):
            return MISSING
        return "%.17g" % v

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + ["time", "event"])
        for i in range(ds.n):
            row = [fmt(v) for v in ds.X[i]]
            row.append("%.17g" % ds.time[i])
            row.append(str(int(ds.event[i])))
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Normalization and imputation


@dataclass(frozen=True)
class Normalizer:
    """Per-column centering/scaling statistics frozen from a training set.

    Only continuous columns are transformed; boolean/indicator columns pass
    through. A zero-spread continuous column maps to all zeros.
    """

    mean: np.ndarray
    scale: np.ndarray
    continuous: np.ndarray


def fit_normalizer(train: Dataset) -> Normalizer:
    """Fit normalization statistics (mean, sd with n-1 denominator) on train."""
    X = train.X
    cont = np.array([m.kind == KIND_CONTINUOUS for m in train.meta])
    mean = np.zeros(train.p)
    scale = np.ones(train.p)
    if cont.any():
        sub = X[:, cont]
        mean[cont] = sub.mean(axis=0)
        if train.n > 1:
            scale[cont] = sub.std(axis=0, ddof=1)
        else:
            scale[cont] = 0.0
    return Normalizer(mean=mean, scale=scale, continuous=cont)


def apply_normalizer(norm: Normalizer, ds: Dataset) -> Dataset:
    """Apply frozen statistics to any dataset (train or held-out test)."""
    if norm.mean.shape[0] != ds.p:
        raise ValidationError("normalizer width does not match dataset")
    X = ds.X.copy()
    cont = norm.continuous
    safe = np.where(norm.scale[cont] > 0, norm.scale[cont], np.inf)
    X[:, cont] = (X[:, cont] - norm.mean[cont]) / safe
    return Dataset(X, ds.meta, ds.time, ds.event)


def impute_simple(train: Dataset, test: Dataset | None = None):
    """Fill NaNs with training statistics: mean (continuous) or mode (0/1).

    Mode ties resolve to 0. A column with no observed value in train is an
    error naming the column. Returns the filled train set, or a
    (train, test) pair when a test set is given; test columns are filled
    with the training statistics (never their own).
    """
    X = train.X
    fill = np.empty(train.p)
    for j, m in enumerate(train.meta):
        col = X[:, j]
        obs = col[~np.isnan(col)]
        if obs.size == 0:
            raise ValidationError(f"column {m.name!r} has no observed values in the training data")
        if m.kind == KIND_CONTINUOUS:
            fill[j] = obs.mean()
        else:
            ones = int((obs == 1.0).sum())
            fill[j] = 1.0 if ones > obs.size - ones else 0.0

    def filled(ds: Dataset) -> Dataset:
        Xf = ds.X.copy()
        mask = np.isnan(Xf)
        if mask.any():
            Xf[mask] = np.broadcast_to(fill, Xf.shape)[mask]
        return Dataset(Xf, ds.meta, ds.time, ds.event)

    if test is None:
        return filled(train)
    if test.p != train.p:
        raise ValidationError("train/test column mismatch")
    return filled(train), filled(test)


# ---------------------------------------------------------------------------
# Cross-validation folds


@dataclass(frozen=True)
class FoldPlan:
    """Repeated k-fold assignment over n rows.

    assignments[r][f] holds the test-row indices of fold f in repeat r.
    Within a repeat the folds partition range(n) with sizes differing by
    at most one.
    """

    n: int
    k: int
    repeats: int
    assignments: tuple[tuple[np.ndarray, ...], ...]

    def test_indices(self, repeat: int, fold: int) -> np.ndarray:
        return self.assignments[repeat][fold]

    def train_indices(self, repeat: int, fold: int) -> np.ndarray:
        test = set(self.assignments[repeat][fold].tolist())
        return np.array([i for i in range(self.n) if i not in test], dtype=np.intp)

    def iter_folds(self) -> Iterator[tuple[int, int, np.ndarray, np.ndarray]]:
        for r in range(self.repeats):
            for f in range(self.k):
                yield r, f, self.train_indices(r, f), self.test_indices(r, f)


def make_folds(n: int, k: int, repeats: int, seed: int) -> FoldPlan:
    """Build a repeated k-fold plan from an independent permutation per repeat."""
    if k < 2 or k > n:
        raise ValidationError(f"need 2 <= k <= n, got k={k}, n={n}")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    assignments = []
    for r in range(repeats):
        perm = child_rng(seed, TAG_FOLDS, r).permutation(n)
        folds = tuple(np.sort(part).astype(np.intp) for part in np.array_split(perm, k))
        assignments.append(folds)
    return FoldPlan(n=n, k=k, repeats=repeats, assignments=tuple(assignments))


# ---------------------------------------------------------------------------
# Synthetic benchmark data


@dataclass(frozen=True)
class SynthConfig:
    """Recipe for an equicorrelated Gaussian design with exponential times.

    relevant maps feature index -> true log-hazard coefficient. correlation
    is the common pairwise correlation of the design. target_censoring in
    [0, 1) is hit by calibrating an independent exponential censoring rate
    against the generated latent times.
    """

    n: int
    p: int
    relevant: Mapping[int, float] = field(default_factory=dict)
    target_censoring: float = 0.0
    correlation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise ValidationError("need n >= 2 and p >= 1")
        if not 0.0 <= self.target_censoring < 1.0:
            raise ValidationError(f"target_censoring must be in [0, 1), got {self.target_censoring}")
        if not 0.0 <= self.correlation < 1.0:
            raise ValidationError(f"correlation must be in [0, 1), got {self.correlation}")
        if len(self.relevant) > self.p:
            raise ValidationError("more relevant features than features")
        for idx in self.relevant:
            if not 0 <= int(idx) < self.p:
                raise ValidationError(f"relevant index {idx} out of range")
        object.__setattr__(self, "relevant", dict(self.relevant))


def _feature_name(j: int, p: int) -> str:
    width = max(3, len(str(p - 1)))
    return f"x{j:0{width}d}"


def _calibrate_censor_rate(thresholds: np.ndarray, target: float) -> float:
    """Bisect for the exponential rate whose empirical censoring hits target.

    thresholds[i] is the rate above which row i would be censored, so the
    empirical censoring fraction at rate c is mean(thresholds < c), a step
    function increasing in c; bisection lands within one step of target.
    """
    lo = 0.0
    hi = 1.0
    for _ in range(200):
        if np.mean(thresholds < hi) >= target:
            break
        hi *= 2.0
    else:
        raise ValidationError("censoring calibration failed to bracket the target")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if np.mean(thresholds < mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def generate_synthetic(cfg: SynthConfig):
    """Generate (Dataset, ground-truth relevant feature names).

    Event times are exponential with rate exp(x . beta); censoring times are
    exponential with a rate calibrated on this sample's own latent draws, so
    the realized censoring fraction is within 1/n of the target.
    """
    rng = child_rng(cfg.seed, TAG_SYNTH)
    Z = rng.standard_normal((cfg.n, cfg.p))
    if cfg.correlation > 0:
        shared = rng.standard_normal(cfg.n)
        X = math.sqrt(cfg.correlation) * shared[:, None] + math.sqrt(1.0 - cfg.correlation) * Z
    else:
        X = Z
    beta = np.zeros(cfg.p)
    for idx, b in cfg.relevant.items():
        beta[int(idx)] = float(b)
    eta = X @ beta
    T = rng.exponential(np.exp(-eta))
    U = rng.uniform(size=cfg.n)

    if cfg.target_censoring == 0.0:
        time = T
        event = np.ones(cfg.n, dtype=bool)
    else:
        # Row i is censored at rate c iff c > -log(U_i)/T_i.
        thresholds = -np.log(U) / T
        c = _calibrate_censor_rate(thresholds, cfg.target_censoring)
        C = -np.log(U) / c
        time = np.minimum(T, C)
        event = T <= C

    meta = tuple(
        FeatureMeta(name=_feature_name(j, cfg.p), kind=KIND_CONTINUOUS) for j in range(cfg.p)
    )
    ds = Dataset(X, meta, time, event)
    truth = tuple(_feature_name(j, cfg.p) for j in sorted(cfg.relevant))
    return ds, truth


def write_truth_json(path, ds: Dataset, truth: Sequence[str], cfg: SynthConfig) -> None:
    """Sidecar JSON naming the ground-truth relevant features of a synthetic CSV."""
    payload = {
        "relevant": list(truth),
        "n": cfg.n,
        "p": cfg.p,
        "target_censoring": cfg.target_censoring,
        "realized_censoring": float(ds.censoring_rate),
        "correlation": cfg.correlation,
        "seed": cfg.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
