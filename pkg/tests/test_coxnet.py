import math

import numpy as np
import pytest

from censel.coxnet import (
    BoostConfig,
    FitOptions,
    componentwise_boost,
    concordance_index,
    concordance_per_column,
    default_lambda_grid,
    elastic_net_path,
    fit_elastic_net,
    fit_ridge_evaluator,
    lambda_max,
    neg_log_partial_likelihood,
    plik_gradient,
    univariate_cindex_scores,
)
from censel.data import SynthConfig, generate_synthetic
from censel.errors import NoComparablePairsError, NoEventsError, ValidationError

from helpers import make_dataset, planted_survival, random_survival
from oracles import (
    brute_cindex,
    brute_neg_log_pl,
    central_diff_gradient,
    newton_ridge_cox,
)


# ================================
# Negative log partial likelihood
# ================================


def test_nll_zero_beta_is_sum_of_log_risk_set_sizes():
    # Distinct times 1..5, all events: risk-set sizes 5,4,3,2,1.
    ds = make_dataset(np.ones((5, 2)), [1, 2, 3, 4, 5], [1, 1, 1, 1, 1])
    expected = sum(math.log(s) for s in (5, 4, 3, 2, 1))
    assert neg_log_partial_likelihood(np.zeros(2), ds) == pytest.approx(expected, rel=1e-12)


def test_nll_two_sample_hand_value():
    ds = make_dataset([[1.0], [0.0]], [1.0, 2.0], [1, 1])
    got = neg_log_partial_likelihood(np.array([1.0]), ds)
    assert got == pytest.approx(math.log(1 + math.e) - 1.0, rel=1e-12)


def test_nll_invariant_to_column_mean_shifts():
    rng = np.random.default_rng(0)
    ds = random_survival(rng, 40, 4, with_ties=True)
    beta = rng.normal(size=4)
    shifted = make_dataset(ds.X - ds.X.mean(axis=0), ds.time, ds.event)
    a = neg_log_partial_likelihood(beta, ds)
    b = neg_log_partial_likelihood(beta, shifted)
    assert a == pytest.approx(b, rel=1e-10)


def test_nll_zero_events_errors():
    ds = make_dataset(np.ones((3, 1)), [1, 2, 3], [0, 0, 0])
    with pytest.raises(NoEventsError):
        neg_log_partial_likelihood(np.zeros(1), ds)


def test_nll_matches_brute_risk_set_oracle():
    rng = np.random.default_rng(42)
    for trial in range(20):
        ds = random_survival(rng, int(rng.integers(5, 30)), int(rng.integers(1, 6)),
                             with_ties=bool(trial % 2))
        beta = rng.normal(scale=0.5, size=ds.p)
        got = neg_log_partial_likelihood(beta, ds)
        want = brute_neg_log_pl(beta, ds.X, ds.time, ds.event)
        assert got == pytest.approx(want, rel=1e-10)


# ================================
# Gradient
# ================================


def _fd_relative_error(ds, beta, h=1e-5):
    # Error relative to the gradient's own scale (inf norm, floored at 1).
    g = plik_gradient(beta, ds)
    fd = central_diff_gradient(lambda b: brute_neg_log_pl(b, ds.X, ds.time, ds.event), beta, h)
    return float(np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(fd))))


def test_gradient_matches_central_differences_on_10x5():
    rng = np.random.default_rng(1)
    for _ in range(10):
        ds = random_survival(rng, 10, 5)
        beta = rng.normal(scale=0.5, size=5)
        assert _fd_relative_error(ds, beta) < 1e-6


def test_gradient_constant_column_component_is_zero():
    rng = np.random.default_rng(2)
    ds = random_survival(rng, 25, 3)
    X = ds.X.copy()
    X[:, 1] = 2.5
    ds2 = make_dataset(X, ds.time, ds.event)
    g = plik_gradient(np.array([0.3, -0.8, 0.1]), ds2)
    assert abs(g[1]) < 1e-10


def test_gradient_two_sample_hand_value():
    # Event at t=1 sees risk {both}, x-average 0.5 -> -(1 - 0.5); the later
    # event's risk set is itself, contributing 0.
    ds = make_dataset([[1.0], [0.0]], [1.0, 2.0], [1, 1])
    g = plik_gradient(np.zeros(1), ds)
    assert g[0] == pytest.approx(-0.5, rel=1e-12)


# ================================
# Elastic net
# ================================


def test_lambda_at_or_above_lambda_max_gives_exact_zero():
    rng = np.random.default_rng(3)
    for _ in range(5):
        ds = random_survival(rng, 30, 6)
        lam_max = lambda_max(ds, alpha=1.0)
        for lam in (lam_max, 1.5 * lam_max):
            model = fit_elastic_net(ds, lam, alpha=1.0)
            assert np.all(model.beta == 0.0)


def test_elastic_net_kkt_residuals():
    rng = np.random.default_rng(4)
    for alpha in (1.0, 0.5):
        for _ in range(4):
            ds = random_survival(rng, 40, 6)
            lam = 0.3 * lambda_max(ds, alpha)
            model = fit_elastic_net(ds, lam, alpha, FitOptions(tol=1e-12))
            from oracles import kkt_violations

            viol = kkt_violations(model.beta, ds.X, ds.time, ds.event, lam, alpha)
            assert np.max(viol) < 1e-5


def test_ridge_small_lambda_matches_newton():
    rng = np.random.default_rng(5)
    ds = planted_survival(rng, 80, 4, [0.8, -0.5, 0.0, 0.3], censoring=0.2)
    model = fit_elastic_net(ds, 1e-10, alpha=0.0, opts=FitOptions(tol=1e-14))
    want = newton_ridge_cox(ds.X, ds.time, ds.event, lam2=0.0)
    assert np.max(np.abs(model.beta - want)) < 1e-4


def test_planted_single_feature_only_nonzero_at_moderate_lambda():
    rng = np.random.default_rng(6)
    ds = planted_survival(rng, 150, 6, [2.0, 0, 0, 0, 0, 0], censoring=0.2)
    lam = 0.5 * lambda_max(ds, alpha=1.0)
    model = fit_elastic_net(ds, lam, alpha=1.0)
    nz = np.flatnonzero(model.beta)
    assert nz.tolist() == [0]


def test_fit_rejects_bad_penalty_arguments():
    rng = np.random.default_rng(7)
    ds = random_survival(rng, 15, 2)
    with pytest.raises(ValidationError):
        fit_elastic_net(ds, -1.0)
    with pytest.raises(ValidationError):
        fit_elastic_net(ds, 0.1, alpha=1.5)


def test_warm_started_path_is_ordered_and_converges():
    rng = np.random.default_rng(8)
    ds = random_survival(rng, 60, 8)
    grid = default_lambda_grid(lambda_max(ds, 1.0))
    models = elastic_net_path(ds, grid, alpha=1.0)
    assert len(models) == grid.size
    assert all(m.converged for m in models)
    # Sparsity can only stay level or fall as the penalty relaxes on a path
    # this coarse.
    nnz = [int(np.count_nonzero(m.beta)) for m in models]
    assert nnz[0] == 0 or grid[0] < lambda_max(ds, 1.0)


# ================================
# Ridge evaluator
# ================================


def test_ridge_evaluator_empty_subset_predicts_constant_risk():
    ds = make_dataset(np.empty((6, 0)), [1, 2, 3, 4, 5, 6], [1, 1, 0, 1, 0, 1])
    model = fit_ridge_evaluator(ds)
    assert model.beta.size == 0
    assert np.all(model.predict_risk(np.empty((4, 0))) == 0.0)


def test_ridge_evaluator_strong_signal_test_cindex():
    rng = np.random.default_rng(9)
    beta = np.array([1.5, -1.5, 1.0, -1.0, 0.8])
    train = planted_survival(rng, 200, 5, beta, censoring=0.3)
    test = planted_survival(rng, 120, 5, beta, censoring=0.3)
    model = fit_ridge_evaluator(train, seed=0)
    c = concordance_index(model.predict_risk(test.X), test.time, test.event)
    assert c >= 0.8


def test_ridge_path_norm_grows_as_lambda_shrinks():
    rng = np.random.default_rng(10)
    ds = random_survival(rng, 60, 4)
    lams = np.geomspace(10.0, 1e-3, 8)
    models = elastic_net_path(ds, lams, alpha=0.0)
    norms = [float(np.linalg.norm(m.beta)) for m in models]
    for a, b in zip(norms, norms[1:]):
        assert b >= a - 1e-6


# ================================
# Concordance
# ================================


def test_concordance_perfect_and_reversed():
    time = np.array([1.0, 2.0, 3.0])
    event = np.array([True, True, True])
    assert concordance_index(np.array([3.0, 2.0, 1.0]), time, event) == 1.0
    assert concordance_index(np.array([1.0, 2.0, 3.0]), time, event) == 0.0


def test_concordance_censoring_rules_by_hand():
    # (1e, 2c, 3e): censored row 2 is never the earlier member of a pair;
    # comparable pairs are (1,2) and (1,3).
    time = np.array([1.0, 2.0, 3.0])
    event = np.array([True, False, True])
    assert concordance_index(np.array([2.0, 1.0, 1.0]), time, event) == 1.0
    # Risk ties count half.
    assert concordance_index(np.array([1.0, 1.0, 1.0]), time, event) == 0.5


def test_concordance_equals_brute_enumeration():
    rng = np.random.default_rng(11)
    for trial in range(50):
        n = int(rng.integers(3, 25))
        time = rng.integers(1, 8, size=n).astype(float)
        event = rng.random(n) < 0.7
        risk = rng.integers(-2, 3, size=n).astype(float)
        want = brute_cindex(risk, time, event)
        if want is None:
            with pytest.raises(NoComparablePairsError):
                concordance_index(risk, time, event)
        else:
            assert concordance_index(risk, time, event) == want


def test_concordance_no_comparable_pairs_errors():
    with pytest.raises(NoComparablePairsError):
        concordance_index(np.array([1.0, 2.0]), np.array([1.0, 2.0]), np.array([False, False]))
    # A lone event at the latest time has no later partner.
    with pytest.raises(NoComparablePairsError):
        concordance_index(np.array([1.0, 2.0]), np.array([1.0, 2.0]), np.array([False, True]))


def test_concordance_antisymmetry_without_risk_ties():
    rng = np.random.default_rng(12)
    for _ in range(20):
        n = int(rng.integers(4, 20))
        time = rng.exponential(1.0, n) + 0.1
        event = rng.random(n) < 0.6
        if not event[np.argsort(time)][:-1].any():
            continue
        risk = rng.permutation(n).astype(float)
        c1 = concordance_index(risk, time, event)
        c2 = concordance_index(-risk, time, event)
        assert c1 + c2 == pytest.approx(1.0, abs=1e-12)


def test_concordance_invariant_under_increasing_transforms():
    rng = np.random.default_rng(13)
    time = rng.exponential(1.0, 30) + 0.1
    event = rng.random(30) < 0.7
    risk = rng.normal(size=30)
    base = concordance_index(risk, time, event)
    assert concordance_index(np.exp(risk), time, event) == base
    assert concordance_index(3.0 * risk + 7.0, time, event) == base


def test_concordance_per_column_matches_scalar_version():
    rng = np.random.default_rng(14)
    ds = random_survival(rng, 40, 5, with_ties=True)
    cols = concordance_per_column(ds.X, ds.time, ds.event)
    for j in range(5):
        assert cols[j] == concordance_index(ds.X[:, j], ds.time, ds.event)


def test_univariate_scores_match_best_direction_concordance():
    rng = np.random.default_rng(15)
    ds = planted_survival(rng, 100, 3, [1.2, -1.2, 0.0], censoring=0.2)
    scores = univariate_cindex_scores(ds)
    # A fitted univariate model orients each feature, so both signs of a
    # strong effect score well above chance.
    assert scores[0] > 0.65 and scores[1] > 0.65
    assert 0.0 <= scores.min() and scores.max() <= 1.0


# ================================
# Componentwise boosting
# ================================


def test_boost_zero_steps_keeps_beta_zero():
    rng = np.random.default_rng(16)
    ds = random_survival(rng, 30, 4)
    model = componentwise_boost(ds, BoostConfig(steps=0))
    assert np.all(model.beta == 0.0)
    assert model.n_iter == 0


def test_boost_picks_the_strong_feature_first():
    rng = np.random.default_rng(17)
    ds = planted_survival(rng, 150, 5, [2.0, 0, 0, 0, 0], censoring=0.2)
    model = componentwise_boost(ds, BoostConfig(steps=1))
    nz = np.flatnonzero(model.beta)
    assert nz.tolist() == [0]


def test_boost_training_likelihood_never_increases_with_budget():
    rng = np.random.default_rng(18)
    ds = planted_survival(rng, 80, 4, [1.0, -0.5, 0, 0], censoring=0.3)
    values = []
    for steps in range(0, 7):
        model = componentwise_boost(ds, BoostConfig(steps=steps))
        values.append(neg_log_partial_likelihood(model.beta, ds))
    for a, b in zip(values, values[1:]):
        assert b <= a + 1e-9


def test_boost_importance_is_permutation_equivariant():
    rng = np.random.default_rng(19)
    ds = planted_survival(rng, 100, 5, [1.5, 0.7, 0, -0.9, 0], censoring=0.3)
    perm = np.array([3, 0, 4, 1, 2])
    permuted = make_dataset(ds.X[:, perm], ds.time, ds.event)
    base = np.abs(componentwise_boost(ds).beta)
    moved = np.abs(componentwise_boost(permuted).beta)
    assert np.allclose(moved, base[perm], atol=1e-12)
