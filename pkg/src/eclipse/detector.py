"""Calibrated logistic hallucination detector.

Features are standardized with training-set statistics (population std,
degenerate columns clamped), then fit with a deterministic damped-Newton
optimizer: weighted negative log-likelihood plus (1/(2C))*||w||^2, the
intercept unpenalized, balanced class weights N/(2*N_k), fixed w=0, b=0
initialization. The decision threshold maximizes F1 on training rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from eclipse import kernels
from eclipse.capacity import FEATURE_NAMES

# Theoretically expected coefficient signs for the seven detector inputs:
# higher entropy raises risk; effective capacity, capacity lift, ratio and
# peak confidence should lower it; likelihood levels load positively.
EXPECTED_SIGNS = {
    "H": +1,
    "C_eff": -1,
    "L_Q": +1,
    "L_QE": +1,
    "delta_L": -1,
    "ratio": -1,
    "p_max": -1,
}

STD_CLAMP = 1e-12


class DetectorError(Exception):
    pass


class TooFewRows(DetectorError):
    pass


class SingleClass(DetectorError):
    pass


class NonFinite(DetectorError):
    pass


@dataclass
class TrainingMeta:
    reg_strength: float
    iterations: int
    converged: bool


@dataclass
class DetectorModel:
    means: np.ndarray
    stds: np.ndarray
    w: np.ndarray
    beta: float
    threshold: float
    training_meta: TrainingMeta
    feature_names: tuple[str, ...] = FEATURE_NAMES


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population std over training rows.

    Stds below 1e-12 (constant columns) are clamped to 1.0 so the
    transformed column is all zeros rather than NaN.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows("standardization needs at least 2 rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0)  # population (ddof=0)
    stds = np.where(stds < STD_CLAMP, 1.0, stds)
    return means, stds


def standardize_apply(X: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - means) / stds


def balanced_weights(y: np.ndarray) -> np.ndarray:
    """Per-row weight N/(2*N_k); equals 1.0 everywhere for balanced classes."""
    y = np.asarray(y)
    n = y.shape[0]
    n_pos = int(np.sum(y == 1))
    n_neg = n - n_pos
    w_pos = n / (2.0 * n_pos)
    w_neg = n / (2.0 * n_neg)
    return np.where(y == 1, w_pos, w_neg)


def fit_logistic(
    X_std: np.ndarray,
    y: np.ndarray,
    reg_strength: float = 1.0,
    class_balanced: bool = True,
    max_iter: int = 1000,
    tol: float = 1e-6,
    feature_names: tuple[str, ...] | None = None,
    scaler: tuple[np.ndarray, np.ndarray] | None = None,
) -> DetectorModel:
    """Fit on pre-standardized rows. Raises SingleClass/NonFinite on bad input."""
    X_std = np.asarray(X_std, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.isfinite(X_std).all():
        raise NonFinite("feature matrix contains non-finite values")
    n_pos = int(np.sum(y == 1))
    if n_pos == 0 or n_pos == y.shape[0]:
        raise SingleClass("both classes must be present")
    sw = balanced_weights(y) if class_balanced else np.ones(y.shape[0])
    w, beta, iters, converged, _, _ = kernels.fit_logistic(
        X_std, y, sw, 1.0 / reg_strength, max_iter, tol
    )
    d = X_std.shape[1]
    if scaler is None:
        means, stds = np.zeros(d), np.ones(d)
    else:
        means, stds = scaler
    if feature_names is None:
        feature_names = FEATURE_NAMES if d == len(FEATURE_NAMES) else tuple(
            f"x{j}" for j in range(d)
        )
    return DetectorModel(
        means=np.asarray(means, dtype=np.float64),
        stds=np.asarray(stds, dtype=np.float64),
        w=np.asarray(w, dtype=np.float64),
        beta=float(beta),
        threshold=0.5,
        training_meta=TrainingMeta(reg_strength, int(iters), bool(converged)),
        feature_names=tuple(feature_names),
    )


def train_detector(
    X: np.ndarray,
    y: np.ndarray,
    reg_strength: float = 1.0,
    class_balanced: bool = True,
    feature_names: tuple[str, ...] | None = None,
) -> DetectorModel:
    """standardize_fit + fit_logistic + select_threshold on raw features."""
    means, stds = standardize_fit(X)
    model = fit_logistic(
        standardize_apply(X, means, stds),
        y,
        reg_strength=reg_strength,
        class_balanced=class_balanced,
        feature_names=feature_names,
        scaler=(means, stds),
    )
    model.threshold = select_threshold(model, X, y)
    return model


def predict_proba(model: DetectorModel, X: np.ndarray) -> np.ndarray | float:
    """sigma(w . standardized(x) + beta); accepts one row or a matrix."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    Xs = standardize_apply(np.atleast_2d(X), model.means, model.stds)
    z = Xs @ model.w + model.beta
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))
    return float(p[0]) if single else p


def f1_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def select_threshold(model: DetectorModel, X_train: np.ndarray, y_train: np.ndarray) -> float:
    """F1-optimal threshold over midpoints of sorted distinct train scores.

    Ties go to the lowest threshold; fewer than two distinct predicted
    probabilities fall back to 0.5. Training rows only: calling this on
    held-out data would leak.
    """
    probs = np.atleast_1d(predict_proba(model, X_train))
    y = np.asarray(y_train)
    distinct = np.unique(probs)
    if distinct.shape[0] < 2:
        return 0.5
    midpoints = (distinct[:-1] + distinct[1:]) / 2.0
    best_threshold = float(midpoints[0])
    best_f1 = -1.0
    for threshold in midpoints:
        f1 = f1_score(y, (probs >= threshold).astype(np.int64))
        if f1 > best_f1:
            best_f1 = f1
            best_threshold = float(threshold)
    return best_threshold


def coefficient_report(model: DetectorModel) -> list[dict]:
    """Per-feature coefficients with expected-sign match flags.

    Ordered by descending absolute coefficient. A zero coefficient never
    matches a nonzero expected sign.
    """
    rows = []
    for name, coef in zip(model.feature_names, model.w):
        expected = EXPECTED_SIGNS.get(name, 0)
        match = bool(np.sign(coef) == expected and coef != 0.0)
        rows.append(
            {
                "feature": name,
                "coefficient": float(coef),
                "expected_sign": "+" if expected > 0 else "-",
                "match": match,
            }
        )
    rows.sort(key=lambda r: -abs(r["coefficient"]))
    return rows


# ---------------------------------------------------------------------------
# Model file: JSON with named per-feature fields
# ---------------------------------------------------------------------------

def model_to_dict(model: DetectorModel) -> dict:
    names = model.feature_names
    return {
        "feature_names": list(names),
        "means": {n: float(v) for n, v in zip(names, model.means)},
        "stds": {n: float(v) for n, v in zip(names, model.stds)},
        "w": {n: float(v) for n, v in zip(names, model.w)},
        "beta": model.beta,
        "threshold": model.threshold,
        "training_meta": {
            "reg_strength": model.training_meta.reg_strength,
            "iterations": model.training_meta.iterations,
            "converged": model.training_meta.converged,
        },
    }


def model_from_dict(payload: dict) -> DetectorModel:
    names = tuple(payload["feature_names"])
    meta = payload["training_meta"]
    return DetectorModel(
        means=np.array([payload["means"][n] for n in names]),
        stds=np.array([payload["stds"][n] for n in names]),
        w=np.array([payload["w"][n] for n in names]),
        beta=float(payload["beta"]),
        threshold=float(payload["threshold"]),
        training_meta=TrainingMeta(
            float(meta["reg_strength"]), int(meta["iterations"]), bool(meta["converged"])
        ),
        feature_names=names,
    )


def save_model(model: DetectorModel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=1), "utf-8")


def load_model(path: str | Path) -> DetectorModel:
    return model_from_dict(json.loads(Path(path).read_text("utf-8")))
