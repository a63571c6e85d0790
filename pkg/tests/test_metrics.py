import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from foltr_unlearn.data import QueryGroup
from foltr_unlearn.metrics import (_band_labels, deterministic_ranking, l2_distance,
                                   ndcg_at_k, offline_eval, online_performance,
                                   paired_t_test, relr_diff, relr_loss, relr_prepare)
from foltr_unlearn.ranker import LinearRanker


def brute_force_ndcg(ranked, k):
    """Oracle: DCG of the list divided by the max DCG over all permutations."""
    def dcg(labels):
        return sum((2.0 ** l - 1.0) / math.log2(i + 2) for i, l in enumerate(labels[:k]))
    best = max(dcg(p) for p in itertools.permutations(ranked))
    if best == 0.0:
        return 0.0
    return dcg(ranked) / best


def test_ndcg_worked_value():
    assert ndcg_at_k([2, 0, 1], [2, 0, 1], 3) == pytest.approx(0.96394, abs=5e-6)


def test_ndcg_perfect_and_zero_cases():
    assert ndcg_at_k([2, 1, 0], [2, 1, 0], 3) == 1.0
    assert ndcg_at_k([0, 0, 0], [0, 0, 0], 3) == 0.0
    assert ndcg_at_k([0, 2], [2, 0], 1) == 0.0
    with pytest.raises(ValueError):
        ndcg_at_k([1], [1], 0)


def test_ndcg_truncates_at_k():
    # only the top k positions count, for both the list and the ideal
    assert ndcg_at_k([1, 0, 2], [1, 0, 2], 2) == pytest.approx(
        brute_force_ndcg([1, 0, 2], 2), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=5))
def test_ndcg_matches_oracle_and_stays_in_unit_interval(labels):
    ours = ndcg_at_k(labels, labels, len(labels))
    assert ours == pytest.approx(brute_force_ndcg(labels, len(labels)), abs=1e-12)
    assert 0.0 <= ours <= 1.0


def test_deterministic_ranking_breaks_ties_by_document_order():
    group = QueryGroup("q", np.array([[1.0], [1.0], [2.0], [1.0]]), np.array([0, 0, 0, 0]))
    ranker = LinearRanker(np.array([1.0]))
    assert deterministic_ranking(ranker, group).tolist() == [2, 0, 1, 3]


def test_offline_eval_averages_over_queries():
    ranker = LinearRanker(np.array([1.0]))
    good = QueryGroup("a", np.array([[2.0], [1.0]]), np.array([1, 0]))
    bad = QueryGroup("b", np.array([[1.0], [2.0]]), np.array([1, 0]))
    value = offline_eval(ranker, {"a": good, "b": bad}, k=2)
    expected = (1.0 + ndcg_at_k([0, 1], [1, 0], 2)) / 2
    assert value == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError):
        offline_eval(ranker, {}, k=2)


def test_online_performance_discounting():
    assert online_performance([1.0, 1.0], 1.0) == 2.0
    assert online_performance([1.0, 1.0], 0.9995) == pytest.approx(1.9995, abs=1e-12)
    # NaN rounds contribute nothing but keep their discount index
    assert online_performance([1.0, math.nan, 1.0], 0.5) == pytest.approx(1.25, abs=1e-12)
    assert online_performance([], 0.5) == 0.0
    with pytest.raises(ValueError):
        online_performance([1.0], 0.0)


def test_band_labels_use_ceiling_boundaries():
    assert _band_labels(7, 3).tolist() == [2, 2, 1, 1, 0, 0, 0]
    assert _band_labels(5, 5).tolist() == [4, 3, 2, 1, 0]
    assert _band_labels(1, 3).tolist() == [2]
    assert _band_labels(10, 3).tolist() == [2, 2, 1, 1, 1, 0, 0, 0, 0, 0]


def test_relr_prepare_selects_highest_loss_queries():
    # model ranks by feature 0 descending; query "good" is ranked perfectly,
    # "bad" is inverted, "mid" is partially wrong
    model = LinearRanker(np.array([1.0]))
    groups = {
        "good": QueryGroup("good", np.array([[3.0], [2.0], [1.0]]), np.array([2, 1, 0])),
        "bad": QueryGroup("bad", np.array([[1.0], [2.0], [3.0]]), np.array([2, 1, 0])),
        "mid": QueryGroup("mid", np.array([[3.0], [1.0], [2.0]]), np.array([2, 1, 0])),
    }
    subset = relr_prepare(groups, model, 3, k_percent=33.0, k=3)
    assert subset.query_ids == ("bad",)
    # features come back in the model's ranking order, labels by rank bands
    assert subset.features[0][:, 0].tolist() == [3.0, 2.0, 1.0]
    assert subset.modified_labels[0].tolist() == [2, 1, 0]
    # ceiling selection: 50% of 3 queries -> 2
    subset2 = relr_prepare(groups, model, 3, k_percent=50.0, k=3)
    assert subset2.query_ids == ("bad", "mid")


def test_relr_loss_and_diff_direction():
    model = LinearRanker(np.array([1.0]))
    groups = {"bad": QueryGroup("bad", np.array([[1.0], [2.0], [3.0]]), np.array([2, 1, 0]))}
    subset = relr_prepare(groups, model, 3, k_percent=100.0, k=3)
    # the defining model has zero loss on its own relabeling
    assert relr_loss(model, subset, k=3) == pytest.approx(0.0, abs=1e-12)
    inverted = LinearRanker(np.array([-1.0]))
    assert relr_diff(model, inverted, subset, k=3) > 0.0


def test_l2_distance():
    assert l2_distance([0.0, 3.0], [4.0, 0.0]) == 5.0
    with pytest.raises(ValueError):
        l2_distance([1.0], [1.0, 2.0])


def test_paired_t_test_matches_scipy():
    rng = np.random.default_rng(0)
    a = rng.normal(size=12)
    b = a + rng.normal(scale=0.5, size=12) + 0.3
    t_ours, p_ours = paired_t_test(a, b)
    t_ref, p_ref = stats.ttest_rel(a, b)
    assert t_ours == pytest.approx(t_ref, abs=1e-12)
    assert p_ours == pytest.approx(p_ref, abs=1e-12)


def test_paired_t_test_zero_variance_rules():
    assert paired_t_test([1.0, 1.0], [1.0, 1.0]) == (0.0, 1.0)
    t, p = paired_t_test([2.0, 2.0], [1.0, 1.0])
    assert p == 0.0 and t == math.inf
    with pytest.raises(ValueError):
        paired_t_test([1.0], [2.0])
