"""Shared dataset builders for the test suite."""

from __future__ import annotations

import numpy as np

from censel.data import KIND_BOOLEAN, KIND_CONTINUOUS, Dataset, FeatureMeta


def continuous_meta(p, prefix="f"):
    return tuple(FeatureMeta(name=f"{prefix}{j}", kind=KIND_CONTINUOUS) for j in range(p))


def make_dataset(X, time, event) -> Dataset:
    """Dataset with generated continuous metadata."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return Dataset(X, continuous_meta(X.shape[1]), np.asarray(time, float), np.asarray(event, bool))


def boolean_dataset(X, time, event) -> Dataset:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    meta = tuple(FeatureMeta(name=f"b{j}", kind=KIND_BOOLEAN) for j in range(X.shape[1]))
    return Dataset(X, meta, np.asarray(time, float), np.asarray(event, bool))


def random_survival(rng, n, p, censoring=0.3, with_ties=False) -> Dataset:
    """Gaussian design with exponential times and independent censoring flags.

    Guarantees at least one event and one comparable pair so likelihood and
    concordance code can run on any draw.
    """
    X = rng.normal(size=(n, p))
    time = rng.exponential(1.0, size=n) + 0.05
    if with_ties:
        time = np.ceil(time * 4.0) / 4.0
    event = rng.random(n) >= censoring
    if not event.any():
        event[int(rng.integers(n))] = True
    if event.sum() == 1 and n > 1:
        # A lone event at the maximum time has no comparable pair; give the
        # earliest row the event instead.
        only = int(np.flatnonzero(event)[0])
        if time[only] == time.max():
            event[only] = False
            event[int(np.argmin(time))] = True
    return make_dataset(X, time, event)


def planted_survival(rng, n, p, beta, censoring=0.3) -> Dataset:
    """Exponential survival times driven by X @ beta, censored independently."""
    X = rng.normal(size=(n, p))
    eta = X @ np.asarray(beta, dtype=float)
    time = rng.exponential(1.0, size=n) / np.exp(eta) + 1e-6
    event = rng.random(n) >= censoring
    if not event.any():
        event[int(rng.integers(n))] = True
    return make_dataset(X, time, event)
