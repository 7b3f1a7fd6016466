"""Ensemble feature selection for right-censored survival data.

Bootstrap ensembles of survival feature selectors, rank aggregation
(mean rank / mean weight / robust rank aggregation / threshold algorithm /
MedRank), data-driven cutoffs (quantile, kernel density, random probes),
and a stability-vs-accuracy evaluation harness.
"""

from .data import (
    Dataset,
    FeatureMeta,
    FoldPlan,
    Normalizer,
    SynthConfig,
    fit_normalizer,
    apply_normalizer,
    generate_synthetic,
    impute_simple,
    load_csv,
    make_folds,
    write_csv,
)
from .coxnet import (
    BoostConfig,
    CoxModel,
    FitOptions,
    componentwise_boost,
    concordance_index,
    fit_elastic_net,
    fit_ridge_evaluator,
    lambda_max,
    neg_log_partial_likelihood,
    plik_gradient,
)
from .selectors import (
    Ranking,
    SelectionResult,
    SelectorKind,
    UNI,
    LASSO,
    ENET,
    CBOOST,
    apply_fixed_threshold,
    rank_features,
    run_selector,
)
from .ensemble import EnsembleRun, ProbeSet, bootstrap_sample, inject_probes, mean_subset_length, run_ensemble
from .aggregate import AggregateResult, RankedList, mean_rank, mean_weight, medrank, rra, threshold_algorithm
from .threshold import (
    ThresholdResult,
    best_probe_threshold,
    kde_threshold,
    quantile75_threshold,
    silverman_bandwidth,
)
from .stability import euclidean_score, relative_weighted_consistency, weighted_consistency
from .harness import (
    ExperimentConfig,
    ModelResult,
    ThresholdSpec,
    consensus_features,
    emit_report,
    emit_scatter,
    rank_thresholds,
    run_experiment,
)

__version__ = "0.1.0"
