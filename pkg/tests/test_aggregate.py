import numpy as np
import pytest
from scipy.stats import rankdata

from censel.aggregate import (
    RankedList,
    mean_rank,
    mean_weight,
    medrank,
    ranked_list,
    rra,
    threshold_algorithm,
)
from censel.errors import ValidationError
from censel.selectors import Ranking, SelectionResult, rank_features

from oracles import borda_order, brute_topk_sum, direct_medrank, direct_rra_pvalue


def _ranking(ranks):
    return Ranking(np.asarray(ranks, dtype=np.float64))


def _result(scores, sparse=False):
    scores = np.asarray(scores, dtype=np.float64)
    if sparse:
        return SelectionResult(scores, np.flatnonzero(scores > 0), sparse=True)
    return SelectionResult(scores, np.arange(scores.size, dtype=np.intp), sparse=False)


def _rlist(ids, scores):
    ids = np.asarray(ids, dtype=np.intp)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((ids, -scores))
    return RankedList(ids[order], scores[order])


def _random_lists(rng, B, N, sparse=True):
    lists = []
    for _ in range(B):
        size = int(rng.integers(1, N + 1)) if sparse else N
        ids = rng.choice(N, size=size, replace=False)
        # Continuous scores: ties have probability zero, so set equality
        # against the brute oracle is well defined.
        scores = rng.random(size) + 0.01
        lists.append(_rlist(ids, scores))
    return lists


# ================================
# Mean rank
# ================================


def test_mean_rank_single_ranking_is_identity():
    agg = mean_rank([_ranking([2, 1, 3])])
    np.testing.assert_array_equal(agg.order, [1, 0, 2])
    np.testing.assert_array_equal(agg.agg_score, [2.0, 1.0, 3.0])
    assert not agg.higher_is_better
    assert agg.selected is None


def test_mean_rank_symmetric_tie_breaks_by_id():
    agg = mean_rank([_ranking([1, 2]), _ranking([2, 1])])
    np.testing.assert_array_equal(agg.agg_score, [1.5, 1.5])
    np.testing.assert_array_equal(agg.order, [0, 1])


def test_mean_rank_equals_borda_count_on_complete_lists():
    rng = np.random.default_rng(0)
    for _ in range(20):
        N = int(rng.integers(3, 12))
        B = int(rng.integers(1, 6))
        R = np.vstack([rng.permutation(N) + 1.0 for _ in range(B)])
        agg = mean_rank([_ranking(row) for row in R])
        np.testing.assert_array_equal(agg.order, borda_order(R))


def test_mean_rank_invariant_under_per_list_monotone_transforms():
    rng = np.random.default_rng(1)
    raw = [rng.random(7) for _ in range(4)]
    transforms = [np.exp, lambda s: 3.0 * s + 11.0, lambda s: s**3, lambda s: s / (s + 1.0)]
    base = mean_rank([rank_features(_result(s)) for s in raw])
    moved = mean_rank([rank_features(_result(t(s))) for s, t in zip(raw, transforms)])
    np.testing.assert_array_equal(base.order, moved.order)
    np.testing.assert_array_equal(base.agg_score, moved.agg_score)


def test_mean_rank_rejects_mismatched_universes():
    with pytest.raises(ValidationError):
        mean_rank([_ranking([1, 2]), _ranking([1, 2, 3])])
    with pytest.raises(ValidationError):
        mean_rank([])


# ================================
# Mean weight
# ================================


def test_mean_weight_symmetric_tie_breaks_by_id():
    agg = mean_weight([_result([1.0, 0.0], sparse=True), _result([0.0, 1.0], sparse=True)])
    np.testing.assert_array_equal(agg.agg_score, [0.5, 0.5])
    np.testing.assert_array_equal(agg.order, [0, 1])
    assert agg.higher_is_better


def test_mean_weight_single_result_is_identity():
    agg = mean_weight([_result([0.2, 0.9, 0.5])])
    np.testing.assert_array_equal(agg.order, [1, 2, 0])
    np.testing.assert_array_equal(agg.agg_score, [0.2, 0.9, 0.5])


def test_mean_weight_never_selected_feature_ranks_last():
    results = [_result([0.5, 0.0, 0.1], sparse=True), _result([0.2, 0.0, 0.3], sparse=True)]
    agg = mean_weight(results)
    assert agg.agg_score[1] == 0.0
    assert agg.order[-1] == 1


# ================================
# Robust rank aggregation
# ================================


def test_rra_single_list_top_rank_sits_exactly_on_alpha():
    # One list, best rank of 20: p = 1/20 = 0.05, and selection is strict.
    ranks = np.arange(1, 21, dtype=np.float64)
    agg = rra([_ranking(ranks)], alpha=0.05)
    assert agg.p_values[0] == pytest.approx(0.05, rel=1e-12)
    assert 0 not in agg.selected
    assert agg.selected.size == 0


def test_rra_unanimous_winner_worked_example():
    # Ten lists of 20 features all ranking feature 0 first: the depth-10
    # order statistic wins, rho = 0.05 ** 10, Bonferroni puts p at 9.8e-13.
    rng = np.random.default_rng(2)
    rankings = []
    for _ in range(10):
        rest = rng.permutation(np.arange(2.0, 21.0))
        rankings.append(_ranking(np.concatenate([[1.0], rest])))
    agg = rra(rankings, alpha=0.05)
    want = 10 * 0.05**10
    assert agg.p_values[0] == pytest.approx(want, rel=1e-12)
    assert agg.p_values[0] == pytest.approx(9.8e-13, rel=0.01)
    assert 0 in agg.selected
    assert agg.order[0] == 0


def test_rra_matches_direct_binomial_tail_oracle():
    rng = np.random.default_rng(3)
    for _ in range(15):
        N = int(rng.integers(3, 15))
        B = int(rng.integers(1, 8))
        R = np.vstack([rng.permutation(N) + 1.0 for _ in range(B)])
        agg = rra([_ranking(row) for row in R])
        for f in range(N):
            want = direct_rra_pvalue(R[:, f], N)
            assert agg.p_values[f] == pytest.approx(want, rel=1e-9)


def test_rra_improving_a_rank_never_raises_the_p_value():
    rng = np.random.default_rng(4)
    for _ in range(20):
        N = int(rng.integers(4, 12))
        B = int(rng.integers(2, 6))
        R = np.vstack([rng.permutation(N) + 1.0 for _ in range(B)])
        f = int(rng.integers(N))
        b = int(rng.integers(B))
        if R[b, f] == 1:
            continue
        # Swap feature f one step up in list b, displacing the neighbor.
        target = R[b, f] - 1
        g = int(np.flatnonzero(R[b] == target)[0])
        before = rra([_ranking(row) for row in R]).p_values[f]
        R[b, g], R[b, f] = R[b, f], R[b, g]
        after = rra([_ranking(row) for row in R]).p_values[f]
        assert after <= before + 1e-12


def test_rra_uniform_null_selection_stays_conservative():
    rng = np.random.default_rng(5)
    hits = 0
    total = 0
    for _ in range(40):
        R = np.vstack([rng.permutation(50) + 1.0 for _ in range(20)])
        agg = rra([_ranking(row) for row in R], alpha=0.05)
        hits += agg.selected.size
        total += 50
    assert hits / total <= 0.05


def test_rra_validation():
    with pytest.raises(ValidationError):
        rra([])
    with pytest.raises(ValidationError):
        rra([_ranking([1, 2])], alpha=0.0)


# ================================
# Threshold algorithm
# ================================


def test_ta_matches_brute_force_topk_on_random_instances():
    rng = np.random.default_rng(6)
    for _ in range(100):
        N = int(rng.integers(2, 30))
        B = int(rng.integers(1, 7))
        k = int(rng.integers(1, 9))
        lists = _random_lists(rng, B, N)
        agg = threshold_algorithm(lists, k, N)
        pairs = [(lst.ids, lst.scores) for lst in lists]
        assert set(agg.selected.tolist()) == brute_topk_sum(pairs, k, N)


def test_ta_single_list_returns_its_prefix():
    lst = _rlist([4, 1, 7], [3.0, 2.0, 1.0])
    agg = threshold_algorithm([lst], 2, 10)
    np.testing.assert_array_equal(agg.selected, [4, 1])
    assert agg.stop_depth == 2


def test_ta_identical_lists_stop_at_depth_k():
    lst = _rlist([0, 1, 2, 3, 4], [5.0, 4.0, 3.0, 2.0, 1.0])
    agg = threshold_algorithm([lst, lst, lst], 3, 5)
    assert agg.stop_depth == 3
    np.testing.assert_array_equal(agg.selected, [0, 1, 2])


def test_ta_keeps_ties_at_the_kth_total():
    # Totals: feature 1 scores 6, features 0 and 2 tie at 5; with k=2 the
    # cut lands on the tie and both stay. Both appear at depth one, so the
    # tie is among seen features (sequential access never reveals more).
    a = _rlist([0, 1], [5.0, 3.0])
    b = _rlist([2, 1], [5.0, 3.0])
    agg = threshold_algorithm([a, b], 2, 4)
    np.testing.assert_array_equal(agg.selected, [1, 0, 2])


def test_ta_with_budget_beyond_content_returns_all_seen():
    lst = _rlist([2, 5], [2.0, 1.0])
    agg = threshold_algorithm([lst], 7, 10)
    assert set(agg.selected.tolist()) == {2, 5}


def test_ta_validation():
    with pytest.raises(ValidationError):
        threshold_algorithm([], 2, 5)
    with pytest.raises(ValidationError):
        threshold_algorithm([_rlist([0], [1.0])], 0, 5)
    with pytest.raises(ValidationError):
        threshold_algorithm([_rlist([9], [1.0])], 1, 5)


# ================================
# MedRank
# ================================


def test_medrank_single_list_emits_its_prefix():
    lst = _rlist([3, 0, 6, 2], [9.0, 8.0, 7.0, 6.0])
    agg = medrank([lst], k=3, quorum=0.2, n_features=10)
    np.testing.assert_array_equal(agg.selected, [3, 0, 6])
    np.testing.assert_array_equal(agg.agg_score[[3, 0, 6]], [1.0, 2.0, 3.0])


def test_medrank_feature_below_quorum_is_never_emitted():
    # Feature 0 leads half of ten lists; a 0.5 quorum needs strictly more.
    leads = [_rlist([0, 1], [2.0, 1.0])] * 5
    trails = [_rlist([2, 3], [2.0, 1.0])] * 5
    agg = medrank(leads + trails, k=4, quorum=0.5, n_features=4)
    assert 0 not in agg.selected
    assert agg.selected.size == 0


def test_medrank_matches_direct_oracle_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(60):
        N = int(rng.integers(2, 20))
        B = int(rng.integers(1, 8))
        k = int(rng.integers(1, 6))
        quorum = float(rng.choice([0.0, 0.2, 0.4, 0.6]))
        lists = _random_lists(rng, B, N)
        agg = medrank(lists, k=k, quorum=quorum, n_features=N)
        pairs = [(lst.ids, lst.scores) for lst in lists]
        want = direct_medrank(pairs, k, quorum, N)
        assert agg.selected.tolist() == want


def test_medrank_same_depth_candidates_emit_by_ascending_id():
    lists = [_rlist([1], [1.0]), _rlist([0], [1.0])]
    agg = medrank(lists, k=2, quorum=0.2, n_features=2)
    np.testing.assert_array_equal(agg.selected, [0, 1])


def test_medrank_validation():
    with pytest.raises(ValidationError):
        medrank([], k=1)
    with pytest.raises(ValidationError):
        medrank([_rlist([0], [1.0])], k=0)
    with pytest.raises(ValidationError):
        medrank([_rlist([0], [1.0])], k=1, quorum=1.0)


# ================================
# Shared behavior
# ================================


def test_all_aggregators_ignore_replicate_order():
    rng = np.random.default_rng(8)
    N, B = 12, 5
    R = np.vstack([rng.permutation(N) + 1.0 for _ in range(B)])
    scores = [rng.random(N) for _ in range(B)]
    lists = _random_lists(rng, B, N)
    perm = rng.permutation(B)

    fwd = mean_rank([_ranking(r) for r in R])
    rev = mean_rank([_ranking(R[i]) for i in perm])
    np.testing.assert_array_equal(fwd.order, rev.order)

    fwd = mean_weight([_result(s) for s in scores])
    rev = mean_weight([_result(scores[i]) for i in perm])
    np.testing.assert_array_equal(fwd.order, rev.order)

    fwd = rra([_ranking(r) for r in R])
    rev = rra([_ranking(R[i]) for i in perm])
    np.testing.assert_allclose(fwd.p_values, rev.p_values, rtol=1e-12)

    fwd = threshold_algorithm(lists, 4, N)
    rev = threshold_algorithm([lists[i] for i in perm], 4, N)
    np.testing.assert_array_equal(fwd.selected, rev.selected)
    assert fwd.stop_depth == rev.stop_depth

    fwd = medrank(lists, 4, 0.2, N)
    rev = medrank([lists[i] for i in perm], 4, 0.2, N)
    np.testing.assert_array_equal(fwd.selected, rev.selected)


def test_oriented_scores_flip_lower_is_better_methods():
    agg = mean_rank([_ranking([1, 2, 3])])
    np.testing.assert_array_equal(agg.oriented_scores(), [-1.0, -2.0, -3.0])
    agg2 = mean_weight([_result([0.3, 0.1, 0.2])])
    np.testing.assert_array_equal(agg2.oriented_scores(), [0.3, 0.1, 0.2])


def test_ranked_list_construction_and_validation():
    res = _result([0.0, 2.0, 1.0, 2.0], sparse=True)
    lst = ranked_list(res)
    np.testing.assert_array_equal(lst.ids, [1, 3, 2])
    np.testing.assert_array_equal(lst.scores, [2.0, 2.0, 1.0])
    with pytest.raises(ValidationError):
        RankedList(np.array([0, 1]), np.array([1.0, 2.0]))
    with pytest.raises(ValidationError):
        RankedList(np.array([0, 0]), np.array([2.0, 1.0]))
    with pytest.raises(ValidationError):
        RankedList(np.array([0, 1]), np.array([2.0, 0.0]))


def test_rank_features_feeds_rra_with_midranks():
    # Mid-ranks from score ties stay within [1, N] and are accepted.
    res = _result([0.5, 0.5, 0.1])
    agg = rra([rank_features(res)] * 3)
    assert np.all(agg.p_values >= 0) and np.all(agg.p_values <= 1)
    assert rankdata([-0.5, -0.5, -0.1]).tolist() == [1.5, 1.5, 3.0]
