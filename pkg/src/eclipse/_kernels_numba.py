"""Numba @njit implementations of the numeric hot-path kernels.

Loop-style twins of _kernels_numpy.py; compiled lazily on first call and
cached on disk (cache=True) so repeated runs skip compilation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

METRIC_AUC = 0
METRIC_AP = 1


@njit(cache=True)
def _sigmoid_scalar(z):
    if z > 35.0:
        z = 35.0
    elif z < -35.0:
        z = -35.0
    return 1.0 / (1.0 + np.exp(-z))


@njit(cache=True)
def sigmoid(z):
    out = np.empty(z.shape[0])
    for i in range(z.shape[0]):
        out[i] = _sigmoid_scalar(z[i])
    return out


@njit(cache=True)
def rank_auc(scores, labels):
    n = scores.shape[0]
    order = np.argsort(scores, kind="mergesort")
    rank_sum = 0.0
    n_pos = 0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg_rank = (i + j) / 2.0 + 1.0  # 1-based average rank of the tie block
        for k in range(i, j + 1):
            if labels[order[k]] == 1:
                rank_sum += avg_rank
                n_pos += 1
        i = j + 1
    n_neg = n - n_pos
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@njit(cache=True)
def average_precision(scores, labels):
    n = scores.shape[0]
    order = np.argsort(-scores, kind="mergesort")
    n_pos = 0
    for i in range(n):
        if labels[i] == 1:
            n_pos += 1
    ap = 0.0
    prev_recall = 0.0
    tp = 0.0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        for k in range(i, j + 1):
            if labels[order[k]] == 1:
                tp += 1.0
        precision = tp / (j + 1)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return ap


@njit(cache=True)
def metric_over_resamples(scores, labels, indices, metric_id):
    n_resamples, n = indices.shape
    out = np.empty(n_resamples)
    s = np.empty(n)
    y = np.empty(n, dtype=np.int64)
    for r in range(n_resamples):
        for i in range(n):
            s[i] = scores[indices[r, i]]
            y[i] = labels[indices[r, i]]
        if metric_id == METRIC_AUC:
            out[r] = rank_auc(s, y)
        else:
            out[r] = average_precision(s, y)
    return out


@njit(cache=True)
def _logistic_objective(Xa, y, sw, pen, theta):
    n = Xa.shape[0]
    z = Xa @ theta
    nll = 0.0
    for i in range(n):
        zi = z[i]
        m = zi if zi > 0.0 else 0.0
        nll += sw[i] * (m - y[i] * zi + np.log1p(np.exp(-abs(zi))))
    reg = 0.0
    for j in range(theta.shape[0]):
        reg += pen[j] * theta[j] * theta[j]
    return nll + 0.5 * reg


@njit(cache=True)
def fit_logistic(X, y, sample_weight, l2, max_iter, tol):
    n, d = X.shape
    Xa = np.ones((n, d + 1))
    Xa[:, :d] = X
    pen = np.zeros(d + 1)
    for j in range(d):
        pen[j] = l2
    theta = np.zeros(d + 1)
    history = np.empty(max_iter + 1)
    obj = _logistic_objective(Xa, y, sample_weight, pen, theta)
    history[0] = obj

    steps = 0
    while steps < max_iter:
        p = sigmoid(Xa @ theta)
        grad = Xa.T @ (sample_weight * (p - y)) + pen * theta
        grad_inf = 0.0
        for j in range(d + 1):
            if abs(grad[j]) > grad_inf:
                grad_inf = abs(grad[j])
        if grad_inf < tol:
            break
        curvature = sample_weight * p * (1.0 - p)
        hess = (Xa * curvature.reshape(n, 1)).T @ Xa
        for j in range(d + 1):
            hess[j, j] += pen[j] + 1e-10
        direction = np.linalg.solve(hess, grad)
        descent = grad @ direction
        t = 1.0
        accepted = False
        while t > 1e-12:
            candidate = theta - t * direction
            cand_obj = _logistic_objective(Xa, y, sample_weight, pen, candidate)
            if cand_obj <= obj - 1e-4 * t * descent:
                theta = candidate
                obj = cand_obj
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        steps += 1
        history[steps] = obj

    p = sigmoid(Xa @ theta)
    grad = Xa.T @ (sample_weight * (p - y)) + pen * theta
    grad_inf = 0.0
    for j in range(d + 1):
        if abs(grad[j]) > grad_inf:
            grad_inf = abs(grad[j])
    converged = grad_inf < tol
    return (
        theta[:d].copy(),
        theta[d],
        steps,
        converged,
        grad_inf,
        history[: steps + 1].copy(),
    )


@njit(cache=True)
def second_derivative_grid(h, alpha, lam, a, h_pref, z0):
    out = np.empty(h.shape[0])
    for i in range(h.shape[0]):
        s = _sigmoid_scalar(a * (h[i] - h_pref) + z0)
        out[i] = 2.0 * alpha + lam * a * a * s * (1.0 - s) * (1.0 - 2.0 * s)
    return out


@njit(cache=True)
def minimize_scalar_gd(h0, alpha, lam, a, h_pref, z0, step, max_iter, gtol):
    h = h0
    for it in range(max_iter):
        s = _sigmoid_scalar(a * (h - h_pref) + z0)
        grad = 2.0 * alpha * (h - h_pref) + lam * a * s * (1.0 - s)
        if abs(grad) < gtol:
            return h, it, True
        h -= step * grad
    return h, max_iter, False
