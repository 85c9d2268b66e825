"""Ranking metrics, stratified folds, bootstrap intervals, coverage curves.

roc_auc is the Mann-Whitney statistic (ties count 0.5); average_precision
is the step-wise sweep with tied scores processed as one block. Both are
exact against brute-force pair/sweep enumeration on small instances.
"""

from __future__ import annotations

import numpy as np

from eclipse import kernels


class MetricError(Exception):
    pass


class SingleClass(MetricError):
    pass


class NoPositives(MetricError):
    pass


class TooFewPerClass(MetricError):
    pass


class DegenerateResamples(MetricError):
    pass


def _as_arrays(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape:
        raise ValueError("scores and labels must align")
    return s, y


def roc_auc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative."""
    s, y = _as_arrays(scores, labels)
    n_pos = int(np.sum(y == 1))
    if n_pos == 0 or n_pos == y.shape[0]:
        raise SingleClass("ROC AUC needs both classes")
    return float(kernels.rank_auc(s, y))


def average_precision(scores, labels) -> float:
    """Sum of (R_i - R_{i-1}) * P_i over a descending-score sweep."""
    s, y = _as_arrays(scores, labels)
    if int(np.sum(y == 1)) == 0:
        raise NoPositives("average precision needs at least one positive")
    return float(kernels.average_precision(s, y))


def stratified_folds(labels, k: int, seed: int) -> np.ndarray:
    """Fold ids (0..k-1) preserving class proportions within +-1 example.

    Deterministic under seed: within each class, indices are shuffled and
    dealt round-robin.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    classes, counts = np.unique(y, return_counts=True)
    if counts.min() < k:
        raise TooFewPerClass(f"every class needs >= {k} members")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.shape[0], dtype=np.int64)
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        folds[idx] = np.arange(idx.shape[0]) % k
    return folds


def bootstrap_ci(
    scores,
    labels,
    n_resamples: int = 1000,
    seed: int = 0,
    metric=roc_auc,
) -> tuple[float, float]:
    """Percentile 2.5/97.5 interval of the metric over resampled pairs.

    Resamples that contain a single class are redrawn; after
    10 * n_resamples total draws DegenerateResamples is raised.
    """
    s, y = _as_arrays(scores, labels)
    if n_resamples < 100:
        raise ValueError("n_resamples must be >= 100")
    n = s.shape[0]
    rng = np.random.default_rng(seed)
    rows = np.empty((n_resamples, n), dtype=np.int64)
    collected = 0
    attempts = 0
    limit = 10 * n_resamples
    while collected < n_resamples:
        if attempts >= limit:
            raise DegenerateResamples(f"{limit} attempts produced too few two-class resamples")
        idx = rng.integers(0, n, n)
        attempts += 1
        resampled = y[idx]
        if resampled.min() == resampled.max():
            continue
        rows[collected] = idx
        collected += 1

    if metric is roc_auc:
        values = kernels.metric_over_resamples(s, y, rows, kernels.METRIC_AUC)
    elif metric is average_precision:
        values = kernels.metric_over_resamples(s, y, rows, kernels.METRIC_AP)
    else:
        values = np.array([metric(s[idx], y[idx]) for idx in rows])
    lo, hi = np.percentile(values, [2.5, 97.5])
    return float(lo), float(hi)


def coverage_curve(
    probabilities,
    labels,
    coverage_grid=None,
    ids=None,
) -> list[dict]:
    """Hallucination rate among the accepted fraction of examples.

    For coverage c the ceil(c*n) examples with the lowest predicted
    hallucination probability are accepted; ties break by example id. At
    c=1.0 the rate equals dataset prevalence exactly.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if coverage_grid is None:
        coverage_grid = [round(0.1 * i, 1) for i in range(1, 11)]
    if any(c <= 0.0 or c > 1.0 for c in coverage_grid):
        raise ValueError("coverage grid values must lie in (0, 1]")
    ids = list(ids) if ids is not None else [str(i) for i in range(p.shape[0])]
    order = sorted(range(p.shape[0]), key=lambda i: (p[i], ids[i]))
    n = p.shape[0]
    points = []
    for c in coverage_grid:
        accepted = order[: int(np.ceil(c * n))]
        rate = float(np.mean(y[accepted]))
        points.append(
            {"coverage": float(c), "n_accepted": len(accepted), "hallucination_rate": rate}
        )
    return points


def roc_points(scores, labels) -> list[tuple[float, float]]:
    """(FPR, TPR) staircase over descending thresholds, for plotting/export."""
    s, y = _as_arrays(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    y_sorted = y[order]
    s_sorted = s[order]
    n_pos = int(np.sum(y == 1))
    n_neg = y.shape[0] - n_pos
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = y.shape[0]
    while i < n:
        j = i
        while j + 1 < n and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        block = y_sorted[i : j + 1]
        tp += int(np.sum(block == 1))
        fp += int(np.sum(block == 0))
        points.append((fp / n_neg if n_neg else 0.0, tp / n_pos if n_pos else 0.0))
        i = j + 1
    return points


def precision_recall_f1(y_true, y_pred) -> tuple[float, float, float]:
    yt = np.asarray(y_true)
    yp = np.asarray(y_pred)
    tp = int(np.sum((yp == 1) & (yt == 1)))
    fp = int(np.sum((yp == 1) & (yt == 0)))
    fn = int(np.sum((yp == 0) & (yt == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
