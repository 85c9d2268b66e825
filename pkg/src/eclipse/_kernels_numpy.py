"""Pure-numpy implementations of the numeric hot-path kernels.

Reference path for the numba kernels in _kernels_numba.py; selected at
import time by kernels.py when ECLIPSE_NUMBA=0 or numba is unavailable.
All functions take/return plain float64/int64 arrays.
"""

from __future__ import annotations

import numpy as np

METRIC_AUC = 0
METRIC_AP = 1


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def rank_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC: P(random positive outranks random negative), ties 0.5.

    Computed from average ranks, which is exact for tied scores.
    """
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    n = s.shape[0]
    # group ids over runs of equal scores -> average 1-based rank per group
    new_group = np.empty(n, dtype=np.bool_)
    new_group[0] = True
    new_group[1:] = s[1:] != s[:-1]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    starts = np.cumsum(counts) - counts
    avg_rank = starts + (counts + 1) / 2.0
    ranks = avg_rank[group]
    n_pos = int(np.sum(y == 1))
    n_neg = n - n_pos
    rank_sum = float(np.sum(ranks[y == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Step-wise AP over a descending score sweep; tied scores form one block."""
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    n_pos = int(np.sum(y == 1))
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    cum_tp = np.cumsum(y == 1)
    tp = cum_tp[ends].astype(np.float64)
    seen = (ends + 1).astype(np.float64)
    precision = tp / seen
    recall = tp / n_pos
    prev_recall = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - prev_recall) * precision))


def metric_over_resamples(
    scores: np.ndarray, labels: np.ndarray, indices: np.ndarray, metric_id: int
) -> np.ndarray:
    """Evaluate a metric on each resample row of indices (shape R x n)."""
    out = np.empty(indices.shape[0])
    for r in range(indices.shape[0]):
        idx = indices[r]
        if metric_id == METRIC_AUC:
            out[r] = rank_auc(scores[idx], labels[idx])
        else:
            out[r] = average_precision(scores[idx], labels[idx])
    return out


def _logistic_objective(Xa, y, sw, pen, theta) -> float:
    z = Xa @ theta
    nll = np.sum(sw * (np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z)))))
    return float(nll + 0.5 * np.sum(pen * theta * theta))


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    l2: float,
    max_iter: int,
    tol: float,
):
    """Damped-Newton fit of weighted L2-penalized logistic regression.

    Minimizes sum_i sw_i * nll_i + 0.5 * l2 * ||w||^2 with an unpenalized
    intercept, starting from w=0, b=0. Convergence: gradient inf-norm < tol.
    Returns (w, intercept, n_iter, converged, grad_inf, objective_history);
    the history is non-increasing by construction (Armijo backtracking).
    """
    n, d = X.shape
    Xa = np.concatenate([X, np.ones((n, 1))], axis=1)
    pen = np.zeros(d + 1)
    pen[:d] = l2
    theta = np.zeros(d + 1)
    history = np.empty(max_iter + 1)
    obj = _logistic_objective(Xa, y, sample_weight, pen, theta)
    history[0] = obj

    steps = 0
    while steps < max_iter:
        p = sigmoid(Xa @ theta)
        grad = Xa.T @ (sample_weight * (p - y)) + pen * theta
        if float(np.max(np.abs(grad))) < tol:
            break
        curvature = sample_weight * p * (1.0 - p)
        hess = (Xa * curvature[:, None]).T @ Xa
        hess[np.diag_indices(d + 1)] += pen + 1e-10
        direction = np.linalg.solve(hess, grad)
        descent = float(grad @ direction)
        t = 1.0
        accepted = False
        while t > 1e-12:
            candidate = theta - t * direction
            cand_obj = _logistic_objective(Xa, y, sample_weight, pen, candidate)
            if cand_obj <= obj - 1e-4 * t * descent:
                theta, obj = candidate, cand_obj
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break  # line search hit the numerical floor
        steps += 1
        history[steps] = obj

    p = sigmoid(Xa @ theta)
    grad = Xa.T @ (sample_weight * (p - y)) + pen * theta
    grad_inf = float(np.max(np.abs(grad)))
    converged = grad_inf < tol
    return (
        theta[:d].copy(),
        float(theta[d]),
        steps,
        converged,
        grad_inf,
        history[: steps + 1].copy(),
    )


def second_derivative_grid(
    h: np.ndarray, alpha: float, lam: float, a: float, h_pref: float, z0: float
) -> np.ndarray:
    """d2/dH2 of alpha*(H-H_pref)^2 + lam*sigmoid(a*(H-H_pref)+z0) on a grid."""
    s = sigmoid(a * (h - h_pref) + z0)
    return 2.0 * alpha + lam * a * a * s * (1.0 - s) * (1.0 - 2.0 * s)


def minimize_scalar_gd(
    h0: float,
    alpha: float,
    lam: float,
    a: float,
    h_pref: float,
    z0: float,
    step: float,
    max_iter: int,
    gtol: float,
):
    """Fixed-step gradient descent on the 1-D objective. Returns (h, iters, converged)."""
    h = h0
    for it in range(max_iter):
        z = a * (h - h_pref) + z0
        z = min(max(z, -35.0), 35.0)
        s = 1.0 / (1.0 + np.exp(-z))
        grad = 2.0 * alpha * (h - h_pref) + lam * a * s * (1.0 - s)
        if abs(grad) < gtol:
            return h, it, True
        h -= step * grad
    return h, max_iter, False
