"""Bootstrap ensembles of selector runs, with optional permutation probes.

A probe is a shadow column whose values are a within-sample permutation of
its parent, re-drawn for every bootstrap replicate; a real feature should
outrank its probe. Boolean original columns get no probe; the indicator
columns of one categorical parent are permuted together with a single row
permutation so the group stays a valid one-hot block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._seeds import TAG_ENSEMBLE, TAG_PROBES, child_rng
from .data import (
    Dataset,
    FeatureMeta,
    KIND_BOOLEAN,
    SOURCE_ONEHOT,
    SOURCE_ORIGINAL,
    SOURCE_PROBE,
)
from .errors import (
    EnsembleError,
    FitDivergedError,
    NoComparablePairsError,
    NoEventsError,
    ValidationError,
)
from .selectors import SelectionResult, SelectorKind, empty_selection, run_selector

MAX_FAILED_FRACTION = 0.2


@dataclass(frozen=True)
class ProbeSet:
    """Probe column layout of an augmented dataset.

    groups pairs the probe column ids with their parent column ids; each
    group is permuted jointly (one row permutation per group per
    replicate). An empty ProbeSet means no column was eligible.
    """

    groups: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    @property
    def probe_ids(self) -> np.ndarray:
        ids = [j for probes, _ in self.groups for j in probes]
        return np.array(sorted(ids), dtype=np.intp)

    @property
    def parent_of(self) -> dict[int, int]:
        out = {}
        for probes, parents in self.groups:
            for pid, par in zip(probes, parents):
                out[pid] = par
        return out

    def __len__(self) -> int:
        return sum(len(probes) for probes, _ in self.groups)


def _eligible_groups(ds: Dataset) -> list[tuple[int, ...]]:
    """Parent column groups that get probes.

    Continuous originals each form their own group; one-hot indicator
    columns group by their categorical parent. Boolean originals are
    skipped: a permuted 0/1 column is another plausible binary feature, not
    a null reference.
    """
    groups: list[tuple[int, ...]] = []
    onehot: dict[str, list[int]] = {}
    for j, m in enumerate(ds.meta):
        if m.source == SOURCE_PROBE:
            raise ValidationError("dataset already contains probe columns")
        if m.source == SOURCE_ONEHOT:
            onehot.setdefault(m.parent, []).append(j)
        elif m.kind != KIND_BOOLEAN:
            groups.append((j,))
    groups.extend(tuple(cols) for cols in onehot.values())
    groups.sort(key=lambda g: g[0])
    return groups


def inject_probes(ds: Dataset, seed: int = 0):
    """Append one permuted shadow column per eligible parent.

    Returns (augmented dataset, ProbeSet). Probe values here are an initial
    permutation; run_ensemble re-permutes them inside every bootstrap
    replicate.
    """
    parent_groups = _eligible_groups(ds)
    if not parent_groups:
        return ds, ProbeSet(groups=())
    rng = child_rng(seed, TAG_PROBES)
    cols = []
    metas = []
    groups = []
    next_id = ds.p
    for parents in parent_groups:
        perm = rng.permutation(ds.n)
        block = ds.X[perm][:, parents]
        cols.append(block)
        probe_ids = tuple(range(next_id, next_id + len(parents)))
        next_id += len(parents)
        for par in parents:
            m = ds.meta[par]
            metas.append(
                FeatureMeta(
                    name=f"probe__{m.name}",
                    kind=m.kind,
                    source=SOURCE_PROBE,
                    parent=m.name,
                    level=m.level,
                )
            )
        groups.append((probe_ids, parents))
    augmented = ds.append_columns(np.hstack(cols), metas)
    return augmented, ProbeSet(groups=tuple(groups))


def bootstrap_sample(ds: Dataset, seed) -> Dataset:
    """Sample n rows with replacement; outcomes travel with their rows."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = rng.integers(0, ds.n, size=ds.n)
    return ds.take_rows(idx)


@dataclass(frozen=True)
class EnsembleRun:
    """B selector results on bootstrap replicates of one dataset.

    base is the (possibly probe-augmented) dataset the replicates were
    drawn from; failed marks replicates whose fit errored (their result is
    an empty placeholder).
    """

    kind: SelectorKind
    base: Dataset
    results: tuple[SelectionResult, ...]
    failed: tuple[bool, ...]
    probes: ProbeSet | None
    seed: int

    @property
    def B(self) -> int:
        return len(self.results)

    @property
    def n_features(self) -> int:
        return self.base.p


def run_ensemble(
    kind: SelectorKind,
    ds: Dataset,
    B: int = 50,
    use_probes: bool = False,
    seed: int = 0,
) -> EnsembleRun:
    """Fit the selector on B bootstrap replicates.

    Each replicate has its own derived seed, so any single replicate can be
    reproduced without running the others. Probe columns are re-permuted
    within every replicate (after row sampling), making each probe an exact
    permutation of its parent's sampled values. A replicate whose fit
    raises is recorded as an empty selection; more than 20% of them failing
    is an error.
    """
    if B < 1:
        raise ValidationError("B must be >= 1")
    if use_probes:
        base, probes = inject_probes(ds, seed)
    else:
        base, probes = ds, None
    results = []
    failed = []
    for b in range(B):
        rng = child_rng(seed, TAG_ENSEMBLE, b)
        idx = rng.integers(0, base.n, size=base.n)
        Xb = base.X[idx].copy()
        if probes is not None:
            for probe_cols, parent_cols in probes.groups:
                perm = rng.permutation(base.n)
                Xb[:, probe_cols] = Xb[perm][:, parent_cols]
        replicate = Dataset(Xb, base.meta, base.time[idx], base.event[idx])
        sel_seed = int(rng.integers(2**63))
        try:
            res = run_selector(kind, replicate, seed=sel_seed)
            results.append(res)
            failed.append(False)
        except (NoEventsError, NoComparablePairsError, FitDivergedError):
            results.append(empty_selection(kind, base.p))
            failed.append(True)
    n_failed = sum(failed)
    if n_failed > MAX_FAILED_FRACTION * B:
        raise EnsembleError(f"{n_failed} of {B} bootstrap replicates failed to fit")
    return EnsembleRun(
        kind=kind,
        base=base,
        results=tuple(results),
        failed=tuple(failed),
        probes=probes,
        seed=seed,
    )


def mean_subset_length(run: EnsembleRun) -> int:
    """Consensus list length k: mean replicate subset size, half rounded up.

    Sparse replicates contribute their selected-set size; the concordance
    filter contributes the count of features scoring above 0.5 (better than
    chance). Failed replicates count as empty. Never below 1.
    """
    lengths = [
        len(r.selected) if r.sparse else int(np.sum(r.scores > 0.5)) for r in run.results
    ]
    mean = float(np.mean(lengths))
    return max(1, int(np.floor(mean + 0.5)))
