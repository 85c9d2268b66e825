import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eclipse import metrics as M


def brute_force_auc(scores, labels):
    """Exhaustive pair enumeration: wins + half-ties over positive-negative pairs."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def brute_force_ap(scores, labels):
    """Naive descending sweep over distinct thresholds, ties as one block."""
    thresholds = sorted(set(scores), reverse=True)
    n_pos = sum(labels)
    ap = 0.0
    prev_recall = 0.0
    for t in thresholds:
        selected = [y for s, y in zip(scores, labels) if s >= t]
        tp = sum(selected)
        precision = tp / len(selected)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def random_instance(rng, max_n=8):
    while True:
        n = int(rng.integers(2, max_n + 1))
        labels = rng.integers(0, 2, n)
        if labels.min() != labels.max():
            break
    # draw from a small value set so ties are frequent
    scores = rng.choice([0.1, 0.25, 0.5, 0.75, 0.9], size=n)
    return scores.astype(np.float64), labels.astype(np.int64)


class TestRocAuc:
    def test_perfect_ranking(self):
        assert M.roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_all_ties_half(self):
        assert M.roc_auc([0.5] * 6, [0, 1, 0, 1, 0, 1]) == 0.5

    def test_three_vs_three_pair_enumeration(self):
        scores = [0.2, 0.5, 0.5, 0.6, 0.4, 0.9]
        labels = [0, 0, 1, 1, 0, 1]
        assert M.roc_auc(scores, labels) == brute_force_auc(scores, labels)

    def test_brute_force_sweep(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            scores, labels = random_instance(rng)
            assert M.roc_auc(scores, labels) == brute_force_auc(scores, labels)

    def test_single_class_rejected(self):
        with pytest.raises(M.SingleClass):
            M.roc_auc([0.1, 0.2], [1, 1])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_monotone_transform_invariance(self, seed):
        rng = np.random.default_rng(seed)
        scores = rng.normal(size=12)
        labels = np.array([0, 1] * 6)
        base = M.roc_auc(scores, labels)
        assert M.roc_auc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert M.roc_auc(3 * scores + 7, labels) == pytest.approx(base, abs=1e-12)


class TestAveragePrecision:
    def test_perfect_ranking(self):
        assert M.average_precision([0.1, 0.9, 0.8, 0.2], [0, 1, 1, 0]) == 1.0

    def test_single_positive_ranked_last(self):
        # hand sweep: positive enters at the last of n rows -> AP = 1/n
        for n in (3, 5, 8):
            scores = list(range(n, 0, -1))
            labels = [0] * (n - 1) + [1]
            assert M.average_precision(scores, labels) == pytest.approx(1.0 / n)

    def test_all_equal_scores_gives_prevalence(self):
        # single tie block: AP = positive prevalence
        assert M.average_precision([0.4] * 8, [0, 1] * 4) == pytest.approx(0.5)

    def test_brute_force_sweep(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            scores, labels = random_instance(rng)
            got = M.average_precision(scores, labels)
            assert got == pytest.approx(brute_force_ap(scores, labels), abs=1e-12)

    def test_no_positives_rejected(self):
        with pytest.raises(M.NoPositives):
            M.average_precision([0.1, 0.2], [0, 0])


class TestStratifiedFolds:
    def test_balanced_200_five_folds(self):
        labels = np.array([0] * 100 + [1] * 100)
        folds = M.stratified_folds(labels, 5, seed=0)
        for f in range(5):
            members = labels[folds == f]
            assert (members == 0).sum() == 20
            assert (members == 1).sum() == 20

    def test_tiny_two_folds(self):
        labels = np.array([0, 0, 1, 1])
        folds = M.stratified_folds(labels, 2, seed=1)
        for f in range(2):
            members = labels[folds == f]
            assert (members == 0).sum() == 1 and (members == 1).sum() == 1

    def test_ratio_within_one_example(self):
        labels = np.array([0] * 33 + [1] * 17)
        folds = M.stratified_folds(labels, 5, seed=2)
        for f in range(5):
            members = labels[folds == f]
            assert abs((members == 0).sum() - 33 / 5) <= 1
            assert abs((members == 1).sum() - 17 / 5) <= 1

    def test_deterministic(self):
        labels = np.array([0, 1] * 20)
        a = M.stratified_folds(labels, 4, seed=9)
        b = M.stratified_folds(labels, 4, seed=9)
        assert np.array_equal(a, b)

    def test_too_few_per_class(self):
        with pytest.raises(M.TooFewPerClass):
            M.stratified_folds(np.array([0, 0, 0, 1]), 2, seed=0)


class TestBootstrapCI:
    def test_interval_orientation(self):
        rng = np.random.default_rng(3)
        scores = np.concatenate([rng.normal(0, 1, 50), rng.normal(1, 1, 50)])
        labels = np.array([0] * 50 + [1] * 50)
        lo, hi = M.bootstrap_ci(scores, labels, n_resamples=1000, seed=0)
        point = M.roc_auc(scores, labels)
        assert lo <= point <= hi
        assert 0.0 <= lo < hi <= 1.0

    def test_constant_metric_degenerate_interval(self):
        lo, hi = M.bootstrap_ci(
            [0.1, 0.9, 0.1, 0.9] * 5, [0, 1] * 10,
            n_resamples=200, seed=0, metric=lambda s, y: 0.7,
        )
        assert lo == hi == 0.7

    def test_separable_contains_one(self):
        scores = [0.1] * 10 + [0.9] * 10
        labels = [0] * 10 + [1] * 10
        lo, hi = M.bootstrap_ci(scores, labels, n_resamples=500, seed=1)
        assert hi == 1.0

    def test_deterministic_under_seed(self):
        scores = np.linspace(0, 1, 30)
        labels = np.array([0, 1] * 15)
        assert M.bootstrap_ci(scores, labels, 200, seed=5) == M.bootstrap_ci(
            scores, labels, 200, seed=5
        )

    def test_generic_metric_path_matches_fast_path(self):
        rng = np.random.default_rng(4)
        scores = rng.normal(size=40)
        labels = np.array([0, 1] * 20)

        def plain_auc(s, y):
            return M.roc_auc(s, y)

        fast = M.bootstrap_ci(scores, labels, 200, seed=7, metric=M.roc_auc)
        slow = M.bootstrap_ci(scores, labels, 200, seed=7, metric=plain_auc)
        assert fast == pytest.approx(slow)

    def test_degenerate_resamples(self):
        # single-class input: every resample is redrawn until the retry
        # budget of 10 * n_resamples attempts is exhausted
        with pytest.raises(M.DegenerateResamples):
            M.bootstrap_ci([0.2, 0.8, 0.5, 0.7], [1, 1, 1, 1], n_resamples=100, seed=0)

    def test_too_few_resamples_rejected(self):
        with pytest.raises(ValueError):
            M.bootstrap_ci([0.1, 0.9] * 5, [0, 1] * 5, n_resamples=50)


class TestCoverageCurve:
    def test_full_coverage_equals_prevalence(self):
        probs = np.linspace(0, 1, 10)
        labels = np.array([0, 1] * 5)
        points = M.coverage_curve(probs, labels, [1.0])
        assert points[0]["hallucination_rate"] == 0.5

    def test_perfect_detector_half_coverage(self):
        probs = np.array([0.1] * 5 + [0.9] * 5)
        labels = np.array([0] * 5 + [1] * 5)
        points = M.coverage_curve(probs, labels, [0.5])
        assert points[0]["hallucination_rate"] == 0.0

    def test_ceil_acceptance_count(self):
        probs = np.linspace(0, 1, 7)
        labels = np.zeros(7, dtype=int)
        points = M.coverage_curve(probs, labels, [0.3])
        assert points[0]["n_accepted"] == int(np.ceil(0.3 * 7))

    def test_tie_break_by_id(self):
        probs = np.array([0.5, 0.5, 0.5, 0.5])
        labels = np.array([1, 0, 0, 1])
        ids = ["d", "a", "b", "c"]
        points = M.coverage_curve(probs, labels, [0.5], ids=ids)
        # ids a, b accepted first; both clean
        assert points[0]["hallucination_rate"] == 0.0

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            M.coverage_curve([0.5], [1], [0.0])


class TestRocPoints:
    def test_staircase_endpoints(self):
        points = M.roc_points([0.9, 0.8, 0.3, 0.1], [1, 0, 1, 0])
        assert points[0] == (0.0, 0.0)
        assert points[-1] == (1.0, 1.0)
