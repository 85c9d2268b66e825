"""ECLIPSE: hallucination detection for grounded QA.

Estimates semantic entropy over clustered answer samples, measures how a
model uses the provided evidence through log-likelihood decomposition
features, and trains a calibrated logistic detector with a full
cross-validation, ablation and coverage evaluation harness.
"""

from eclipse.backend import (
    BackendConfig,
    CallCounter,
    ScoredAnswer,
    SyntheticBackend,
    SyntheticWorld,
    assign_worlds,
    degrade_to_heuristic,
)
from eclipse.capacity import FEATURE_NAMES, FeatureVector, compute_features, consistency_weight
from eclipse.dataset import DatasetManifest, QAExample, build_dataset, generate_clean_examples
from eclipse.detector import DetectorModel, predict_proba, train_detector
from eclipse.entropy import cluster_answers, select_top_answer, semantic_entropy
from eclipse.facts import FactSet, extract_facts, facts_contradict
from eclipse.metrics import average_precision, bootstrap_ci, coverage_curve, roc_auc
from eclipse.pipeline import RunConfig, extract_all_features, run_experiment
from eclipse.theory import ObjectiveParams, certify_convexity

__version__ = "0.1.0"

__all__ = [
    "BackendConfig",
    "CallCounter",
    "DatasetManifest",
    "DetectorModel",
    "FEATURE_NAMES",
    "FactSet",
    "FeatureVector",
    "ObjectiveParams",
    "QAExample",
    "RunConfig",
    "ScoredAnswer",
    "SyntheticBackend",
    "SyntheticWorld",
    "assign_worlds",
    "average_precision",
    "bootstrap_ci",
    "build_dataset",
    "certify_convexity",
    "cluster_answers",
    "compute_features",
    "consistency_weight",
    "coverage_curve",
    "degrade_to_heuristic",
    "extract_all_features",
    "extract_facts",
    "facts_contradict",
    "generate_clean_examples",
    "predict_proba",
    "roc_auc",
    "run_experiment",
    "select_top_answer",
    "semantic_entropy",
    "train_detector",
    "__version__",
]
