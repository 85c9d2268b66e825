"""Cross-validated evaluation: per-fold metrics, bootstrap CI over pooled
out-of-fold predictions, the ablation ladder, and coverage analysis.

Standardization statistics and decision thresholds are computed on training
folds only; held-out rows never touch the fitted model.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from eclipse import detector as De
from eclipse import metrics as M
from eclipse.capacity import FEATURE_NAMES

DEFAULT_LADDER = (
    ("H",),
    ("H", "C_eff"),
    ("H", "C_eff", "L_Q", "L_QE"),
    FEATURE_NAMES,
)


@dataclass
class FoldResult:
    fold: int
    roc_auc: float
    average_precision: float
    precision: float
    recall: float
    f1: float
    threshold: float

    def as_dict(self) -> dict:
        return {
            "fold": self.fold,
            "roc_auc": self.roc_auc,
            "average_precision": self.average_precision,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "threshold": self.threshold,
        }


@dataclass
class EvalReport:
    n_examples: int
    folds: int
    seed: int
    reg_strength: float
    fold_results: list[FoldResult]
    summary: dict  # metric -> {"mean": .., "std": ..} across folds
    bootstrap: dict  # {"metric", "lo", "hi", "n_resamples", "seed"}
    pooled_auc: float
    ablation: list[dict] = field(default_factory=list)
    coverage: list[dict] = field(default_factory=list)
    coefficients: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "n_examples": self.n_examples,
            "folds": self.folds,
            "seed": self.seed,
            "reg_strength": self.reg_strength,
            "fold_results": [f.as_dict() for f in self.fold_results],
            "summary": self.summary,
            "bootstrap": self.bootstrap,
            "pooled_auc": self.pooled_auc,
            "ablation": self.ablation,
            "coverage": self.coverage,
            "coefficients": self.coefficients,
        }


def _feature_columns(names: tuple[str, ...]) -> list[int]:
    return [FEATURE_NAMES.index(n) for n in names]


def cross_validate(
    X: np.ndarray,
    y: np.ndarray,
    folds: int = 5,
    seed: int = 0,
    reg_strength: float = 1.0,
    feature_names: tuple[str, ...] = FEATURE_NAMES,
) -> tuple[list[FoldResult], np.ndarray, list[De.DetectorModel]]:
    """Stratified k-fold; returns per-fold metrics, pooled out-of-fold
    probabilities and the per-fold models."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    fold_ids = M.stratified_folds(y, folds, seed)
    oof = np.empty(y.shape[0])
    results = []
    models = []
    for fold in range(folds):
        train = fold_ids != fold
        test = ~train
        model = De.train_detector(
            X[train], y[train], reg_strength=reg_strength, feature_names=feature_names
        )
        probs = np.atleast_1d(De.predict_proba(model, X[test]))
        oof[test] = probs
        y_pred = (probs >= model.threshold).astype(np.int64)
        precision, recall, f1 = M.precision_recall_f1(y[test], y_pred)
        results.append(
            FoldResult(
                fold=fold,
                roc_auc=M.roc_auc(probs, y[test]),
                average_precision=M.average_precision(probs, y[test]),
                precision=precision,
                recall=recall,
                f1=f1,
                threshold=model.threshold,
            )
        )
        models.append(model)
    return results, oof, models


def summarize_folds(fold_results: list[FoldResult]) -> dict:
    summary = {}
    for metric in ("roc_auc", "average_precision", "precision", "recall", "f1"):
        values = np.array([getattr(f, metric) for f in fold_results])
        summary[metric] = {
            "mean": float(values.mean()),
            "std": float(values.std(ddof=1)) if values.shape[0] > 1 else 0.0,
        }
    return summary


def ablation_ladder(
    X: np.ndarray,
    y: np.ndarray,
    ladder: tuple[tuple[str, ...], ...] = DEFAULT_LADDER,
    folds: int = 5,
    seed: int = 0,
    reg_strength: float = 1.0,
) -> list[dict]:
    """Pooled out-of-fold AUC per rung; each rung adds features to the last.

    Rung deltas telescope to full AUC minus first-rung AUC.
    """
    rows = []
    previous = None
    for names in ladder:
        cols = _feature_columns(tuple(names))
        _, oof, _ = cross_validate(
            X[:, cols], y, folds=folds, seed=seed,
            reg_strength=reg_strength, feature_names=tuple(names),
        )
        auc = M.roc_auc(oof, y)
        rows.append(
            {
                "features": list(names),
                "auc": auc,
                "delta": None if previous is None else auc - previous,
            }
        )
        previous = auc
    return rows


def evaluate(
    X: np.ndarray,
    y: np.ndarray,
    ids: list[str] | None = None,
    folds: int = 5,
    seed: int = 0,
    reg_strength: float = 1.0,
    n_resamples: int = 1000,
    include_ablation: bool = True,
    coverage_grid=None,
    feature_names: tuple[str, ...] = FEATURE_NAMES,
) -> tuple[EvalReport, np.ndarray, list[De.DetectorModel], De.DetectorModel]:
    """Full evaluation; returns (report, oof_probs, fold_models, full_model).

    The bootstrap interval is computed over pooled out-of-fold predictions;
    the full-data model supplies the coefficient report.
    """
    fold_results, oof, fold_models = cross_validate(
        X, y, folds=folds, seed=seed, reg_strength=reg_strength, feature_names=feature_names
    )
    lo, hi = M.bootstrap_ci(oof, y, n_resamples=n_resamples, seed=seed, metric=M.roc_auc)
    full_model = De.train_detector(X, y, reg_strength=reg_strength, feature_names=feature_names)
    report = EvalReport(
        n_examples=int(y.shape[0]),
        folds=folds,
        seed=seed,
        reg_strength=reg_strength,
        fold_results=fold_results,
        summary=summarize_folds(fold_results),
        bootstrap={
            "metric": "roc_auc",
            "lo": lo,
            "hi": hi,
            "n_resamples": n_resamples,
            "seed": seed,
        },
        pooled_auc=M.roc_auc(oof, y),
        coverage=M.coverage_curve(oof, y, coverage_grid, ids=ids),
        coefficients=De.coefficient_report(full_model),
    )
    if include_ablation:
        report.ablation = ablation_ladder(
            X, y, folds=folds, seed=seed, reg_strength=reg_strength
        )
    return report, oof, fold_models, full_model


# ---------------------------------------------------------------------------
# Report writers: JSON plus CSV exports for plotting
# ---------------------------------------------------------------------------

def write_report(report: EvalReport, out_dir: str | Path, oof=None, y=None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    report_path = out / "report.json"
    report_path.write_text(json.dumps(report.as_dict(), sort_keys=True, indent=1), "utf-8")
    written.append(report_path)

    coverage_path = out / "coverage.csv"
    with open(coverage_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["coverage", "n_accepted", "hallucination_rate"])
        for point in report.coverage:
            writer.writerow([point["coverage"], point["n_accepted"], point["hallucination_rate"]])
    written.append(coverage_path)

    if report.ablation:
        ablation_path = out / "ablation.csv"
        with open(ablation_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["features", "auc", "delta"])
            for row in report.ablation:
                writer.writerow(["+".join(row["features"]), row["auc"], row["delta"]])
        written.append(ablation_path)

    if oof is not None and y is not None:
        roc_path = out / "roc_points.csv"
        with open(roc_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["fpr", "tpr"])
            for fpr, tpr in M.roc_points(oof, y):
                writer.writerow([fpr, tpr])
        written.append(roc_path)

    return written
