"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s`. The synthetic end-to-end
criteria share a frozen configuration (ACCEPTANCE_SEED) built in a
module-scoped fixture with all network access blocked.
"""

import math
import socket
import time

import numpy as np
import pytest

from eclipse import capacity as C
from eclipse import dataset as D
from eclipse import detector as De
from eclipse import entropy as E
from eclipse import evaluation as Ev
from eclipse import facts as F
from eclipse import metrics as M
from eclipse import pipeline as P
from eclipse import theory as T
from eclipse.backend import CallCounter, SyntheticBackend, SyntheticWorld

ACCEPTANCE_SEED = 5


def _report(criterion: int, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


class _NoNetwork:
    """Fail fast if anything opens a socket."""

    def __enter__(self):
        self._real = socket.socket

        def blocked(*args, **kwargs):
            raise AssertionError("network access attempted during synthetic run")

        socket.socket = blocked
        return self

    def __exit__(self, *exc):
        socket.socket = self._real
        return False


@pytest.fixture(scope="module")
def synthetic_run(tmp_path_factory):
    """Criterion-5 dataset: 200 balanced examples, features, evaluation."""
    out = tmp_path_factory.mktemp("acceptance")
    config = P.RunConfig(seed=ACCEPTANCE_SEED, out_dir=str(out))
    started = time.perf_counter()
    with _NoNetwork():
        clean = D.generate_clean_examples(100, seed=ACCEPTANCE_SEED)
        manifest = D.build_dataset(clean, seed=ACCEPTANCE_SEED)
        features_path = out / "features.jsonl"
        audit = P.extract_all_features(config, manifest, features_path)
        ids, y, X = C.features_matrix(C.read_features(features_path))
        report, oof, fold_models, full_model = Ev.evaluate(
            X, y, ids=ids, folds=config.folds, seed=ACCEPTANCE_SEED,
            reg_strength=config.reg_strength, n_resamples=config.bootstrap_resamples,
        )
        _, oof_entropy_only, _ = Ev.cross_validate(
            X[:, [0]], y, folds=config.folds, seed=ACCEPTANCE_SEED,
            feature_names=("H",),
        )
    elapsed = time.perf_counter() - started
    return {
        "config": config,
        "manifest": manifest,
        "audit": audit,
        "ids": ids,
        "y": y,
        "X": X,
        "report": report,
        "oof": oof,
        "oof_entropy_only": oof_entropy_only,
        "full_model": full_model,
        "elapsed": elapsed,
        "out": out,
    }


def test_criterion_1_theory_certification():
    started = time.perf_counter()
    params = T.ObjectiveParams(alpha=1.0, lam=1.0, a=2.0, b=1.0, c=0.0,
                               h_pref=1.0, capacity=0.0)
    cert = T.certify_convexity(params)
    floor = 2 * params.alpha - params.lam * params.a**2 / 4.0  # = 1.0

    u = np.linspace(0.0, 1.0, 1_000_001)
    grid_max = float(np.abs(u * (1 - u) * (1 - 2 * u)).max())
    elapsed = time.perf_counter() - started

    ok = (
        cert.bound_satisfied
        and cert.min_second_derivative > 0
        and cert.min_second_derivative >= floor - 1e-9
        and cert.gd_converged
        and abs(grid_max - T.CUBIC_MAX) <= 1e-9
        and elapsed < 5.0
    )
    _report(
        1, ok,
        f"convex with min d2={cert.min_second_derivative:.4f} >= {floor} - 1e-9, "
        f"cubic grid max {grid_max:.6f} = 1/(6*sqrt(3)) +- 1e-9, {elapsed:.2f}s < 5s",
    )


def test_criterion_2_metric_oracles():
    def brute_auc(scores, labels):
        pos = [s for s, t in zip(scores, labels) if t == 1]
        neg = [s for s, t in zip(scores, labels) if t == 0]
        wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
        return wins / (len(pos) * len(neg))

    def brute_ap(scores, labels):
        ap, prev_recall = 0.0, 0.0
        n_pos = sum(labels)
        for t in sorted(set(scores), reverse=True):
            selected = [yy for s, yy in zip(scores, labels) if s >= t]
            tp = sum(selected)
            ap += (tp / n_pos - prev_recall) * (tp / len(selected))
            prev_recall = tp / n_pos
        return ap

    started = time.perf_counter()
    rng = np.random.default_rng(0)
    checked = 0
    max_ap_gap = 0.0
    for _ in range(1000):
        while True:
            n = int(rng.integers(2, 9))
            labels = rng.integers(0, 2, n)
            if labels.min() != labels.max():
                break
        scores = rng.choice([0.0, 0.2, 0.4, 0.6, 0.8, 1.0], size=n)
        auc = M.roc_auc(scores, labels)
        assert auc == brute_auc(list(scores), list(labels)), "AUC mismatch"
        gap = abs(M.average_precision(scores, labels) - brute_ap(list(scores), list(labels)))
        max_ap_gap = max(max_ap_gap, gap)
        assert gap <= 1e-12, "AP mismatch"
        checked += 1
    elapsed = time.perf_counter() - started
    ok = checked == 1000 and elapsed < 10.0
    _report(
        2, ok,
        f"{checked} random instances: AUC exact, AP within {max_ap_gap:.1e} "
        f"of brute force, {elapsed:.2f}s < 10s",
    )


def test_criterion_3_detector_grid_oracle():
    def objective(X, y, w, beta, reg):
        sw = De.balanced_weights(y)
        z = X @ w + beta
        nll = np.sum(sw * (np.maximum(z, 0) - y * z + np.log1p(np.exp(-np.abs(z)))))
        return float(nll + np.sum(w**2) / (2 * reg))

    rng = np.random.default_rng(1)
    worst_margin = -np.inf
    for _ in range(25):
        n = int(rng.integers(4, 9))
        d = int(rng.integers(1, 3))
        X = rng.normal(size=(n, d)).round(2)
        y = rng.integers(0, 2, n).astype(np.int64)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        model = De.fit_logistic(X, y)
        fitted = objective(X, y, model.w, model.beta, 1.0)

        axes = [np.linspace(-8, 8, 100) for _ in range(d + 1)]
        mesh = np.meshgrid(*axes, indexing="ij")
        theta = np.stack([m.ravel() for m in mesh])
        Xa = np.concatenate([X, np.ones((n, 1))], axis=1)
        z = Xa @ theta
        sw = De.balanced_weights(y)
        nll = np.sum(
            sw[:, None] * (np.maximum(z, 0) - y[:, None] * z + np.log1p(np.exp(-np.abs(z)))),
            axis=0,
        )
        grid_min = float(np.min(nll + np.sum(theta[:d] ** 2, axis=0) / 2.0))
        worst_margin = max(worst_margin, fitted - grid_min)
        assert fitted <= grid_min + 1e-4
    _report(3, True, f"optimizer loss <= 100^dim grid minimum + 1e-4 on 25 instances "
                     f"(worst margin {worst_margin:.2e})")


def test_criterion_4_entropy_correctness():
    from eclipse.backend import ScoredAnswer
    from eclipse.entropy import Cluster, ClusterSet

    def profile(sizes):
        k = sum(sizes)
        clusters, start = [], 0
        for size in sizes:
            clusters.append(Cluster(list(range(start, start + size)), start, F.FactSet()))
            start += size
        return ClusterSet(clusters, [s / k for s in sizes])

    expected_73 = -(0.7 * math.log(0.7) + 0.3 * math.log(0.3))
    checks = [
        abs(E.semantic_entropy(profile([10])) - 0.0) <= 1e-6,
        abs(E.semantic_entropy(profile([5, 5])) - math.log(2)) <= 1e-6,
        abs(E.semantic_entropy(profile([7, 3])) - expected_73) <= 1e-6,
        round(E.semantic_entropy(profile([7, 3])), 4) == 0.6109,
    ]

    # paraphrases with matching (entity, attribute, value) cluster together;
    # a 3.8% numeric deviation lands in its own cluster
    texts = [
        "Microsoft's revenue increased to $211B",
        "Microsoft revenue rose to $211B",
        "According to the filing, Microsoft's revenue increased to $211 billion",
        "Microsoft's revenue increased to $219B",
    ]
    answers = [ScoredAnswer(t, (-1.0,)) for t in texts]
    cs = E.cluster_answers(answers, [F.extract_facts(t) for t in texts])
    clustering_ok = (
        len(cs.clusters) == 2
        and cs.clusters[0].members == [0, 1, 2]
        and cs.clusters[1].members == [3]
    )
    ok = all(checks) and clustering_ok
    _report(
        4, ok,
        f"entropy([10], [5,5], [7,3]) = 0, ln2, {expected_73:.4f} within 1e-6; "
        f"paraphrase cluster {cs.clusters[0].members}, 3.8% deviation isolated "
        f"{cs.clusters[1].members}",
    )


def test_criterion_8_call_accounting():
    counter = CallCounter()
    backend = SyntheticBackend(seed=0, counter=counter)
    example = D.QAExample(
        id="acc", query="What was Apple's revenue?",
        evidence="Apple said revenue rose to $94.2B.",
        answer="Apple's revenue rose to $94.2B.",
    )
    backend.register(example, SyntheticWorld(0.8, True, 0.3, 1))
    fv = P.extract_example_features(backend, example, k=10, temperature=0.7)
    ok = counter.calls == 12 and isinstance(fv, C.FeatureVector)
    _report(8, ok, f"one example at K=10 consumed exactly {counter.calls} backend calls")


class TestSyntheticEndToEnd:
    def test_criterion_5_detector_beats_entropy_only(self, synthetic_run):
        run = synthetic_run
        y = run["y"]
        full_auc = M.roc_auc(run["oof"], y)
        entropy_auc = M.roc_auc(run["oof_entropy_only"], y)
        rung_aucs = [row["auc"] for row in run["report"].ablation]
        monotone = all(b >= a - 1e-12 for a, b in zip(rung_aucs, rung_aucs[1:]))
        w = dict(zip(run["full_model"].feature_names, run["full_model"].w))
        ok = (
            len(y) == 200
            and int(y.sum()) == 100
            and full_auc >= 0.85
            and entropy_auc <= 0.60
            and monotone
            and run["audit"]["audit_ok"]
            and run["elapsed"] < 120.0
            and w["H"] > 0
            and w["delta_L"] < 0
        )
        _report(
            5, ok,
            f"200 balanced examples, full AUC {full_auc:.3f} >= 0.85, "
            f"entropy-only {entropy_auc:.3f} <= 0.60, ladder "
            f"{[round(a, 3) for a in rung_aucs]} monotone, w_H {w['H']:+.3f} > 0, "
            f"w_delta_L {w['delta_L']:+.3f} < 0, {run['elapsed']:.1f}s < 120s, "
            f"zero network calls",
        )

    def test_criterion_6_logprob_degradation(self, synthetic_run, tmp_path):
        run = synthetic_run
        config = P.RunConfig(seed=ACCEPTANCE_SEED, out_dir=str(tmp_path))
        with _NoNetwork():
            result = P.degradation_experiment(config, run["manifest"])
        summary = result["summary"]
        drop = summary["auc_drop"]
        retained = summary["mean_retained_logprob_features"]
        ok = (
            drop >= 0.20
            and 0.45 <= summary["auc_degraded"] <= 0.70
            and summary["auc_real"] >= 0.85
            and retained <= 0.50
        )
        _report(
            6, ok,
            f"AUC {summary['auc_real']:.3f} -> {summary['auc_degraded']:.3f} "
            f"(drop {drop:.3f} >= 0.20), mean retained logprob-coefficient "
            f"magnitude {retained:.1%} <= 50%",
        )

    def test_criterion_7_coverage(self, synthetic_run):
        run = synthetic_run
        y, ids = run["y"], run["ids"]
        full_curve = M.coverage_curve(run["oof"], y, ids=ids)
        entropy_curve = M.coverage_curve(run["oof_entropy_only"], y, ids=ids)

        def rate(curve, c):
            return next(p["hallucination_rate"] for p in curve if p["coverage"] == c)

        prevalence = float(np.mean(y))
        at_full = rate(full_curve, 1.0)
        full_30 = rate(full_curve, 0.3)
        entropy_30 = rate(entropy_curve, 0.3)
        ok = at_full == prevalence and full_30 <= entropy_30 / 2.0
        _report(
            7, ok,
            f"rate at coverage 1.0 = {at_full} = prevalence exactly; at 30% "
            f"coverage full {full_30:.3f} <= half of entropy-only {entropy_30:.3f}",
        )

    def test_criterion_9_determinism(self, synthetic_run, tmp_path):
        run = synthetic_run
        reports = []
        features_bytes = []
        for name in ("run_a", "run_b"):
            out = tmp_path / name
            config = P.RunConfig(seed=ACCEPTANCE_SEED, out_dir=str(out))
            with _NoNetwork():
                features = out / "features.jsonl"
                P.extract_all_features(config, run["manifest"], features)
                P.run_experiment(config, features)
            features_bytes.append(features.read_bytes())
            reports.append((out / "report.json").read_bytes())
        ok = reports[0] == reports[1] and features_bytes[0] == features_bytes[1]
        _report(
            9, ok,
            f"two identically-seeded runs: feature files and report.json byte-identical "
            f"({len(reports[0])} bytes)",
        )
