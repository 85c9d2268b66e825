"""End-to-end orchestration: dataset -> features -> train -> evaluate.

Feature extraction consumes exactly K+2 backend calls per example (K
samples, one query-only score, one evidence-conditioned score), is
resumable from an existing feature file, and is deterministic: the
(dataset seed, backend seed, eval seed) triple fixes every output byte.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from eclipse import capacity as C
from eclipse import dataset as D
from eclipse import detector as De
from eclipse import entropy as E
from eclipse import evaluation as Ev
from eclipse import facts as F
from eclipse._util import sha256_file, stable_seed
from eclipse.backend import (
    BackendConfig,
    CallCounter,
    SyntheticBackend,
    assign_worlds,
    degrade_to_heuristic,
)

LOGPROB_FEATURES = ("L_Q", "L_QE", "delta_L", "ratio", "p_max")


class PartialExtraction(RuntimeError):
    """Extraction stopped early; completed rows were written out.

    The original per-example failure is attached as __cause__; rerunning
    resumes from the partial feature file.
    """

    def __init__(self, audit: dict, out_path):
        self.audit = audit
        self.out_path = Path(out_path)
        super().__init__(
            f"feature extraction incomplete ({audit['n_extracted']} of "
            f"{audit['n_examples'] - audit['n_cached']} new examples); "
            f"partial output written to {out_path}"
        )


@dataclass
class RunConfig:
    dataset_path: str = ""
    out_dir: str = "out"
    backend: BackendConfig = field(default_factory=BackendConfig)
    k: int = 10
    temperature: float = 0.7
    folds: int = 5
    bootstrap_resamples: int = 1000
    reg_strength: float = 1.0
    seed: int = 0
    cache_dir: str = ""
    budget: int | None = None
    include_ablation: bool = True
    coverage_grid: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(1, 11))


# Flat key=value config files; CLI flags override file values.
_CONFIG_KEYS = {
    "dataset_path": str,
    "out_dir": str,
    "k": int,
    "temperature": float,
    "folds": int,
    "bootstrap_resamples": int,
    "reg_strength": float,
    "seed": int,
    "cache_dir": str,
    "budget": int,
    "backend_kind": str,
    "endpoint_url": str,
    "model_name": str,
}


def parse_config_file(path: str | Path) -> dict:
    """Parse a flat TOML-like key = value document.

    Strings may be double-quoted; ints, floats and true/false are coerced.
    Lines starting with # are comments.
    """
    values: dict[str, object] = {}
    for raw in Path(path).read_text("utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        if value.startswith('"') and value.endswith('"'):
            values[key] = value[1:-1]
        elif value.lower() in ("true", "false"):
            values[key] = value.lower() == "true"
        else:
            values[key] = _CONFIG_KEYS[key](value)
    return values


def make_backend(config: RunConfig, counter: CallCounter | None = None):
    counter = counter or CallCounter(max_calls=config.budget)
    if config.backend.kind == "synthetic":
        return SyntheticBackend(config.backend, seed=config.seed, counter=counter)
    from eclipse.remote import RemoteBackend

    return RemoteBackend(
        config.backend, counter=counter, cache_dir=config.cache_dir or None
    )


def extract_example_features(
    backend,
    example: D.QAExample,
    k: int = 10,
    temperature: float = 0.7,
    lexicon: F.Lexicon | None = None,
    degrade_seed: int | None = None,
) -> C.FeatureVector:
    """One example's FeatureVector; exactly k+2 backend calls."""
    lexicon = lexicon or F.default_lexicon()
    samples = backend.sample_answers(
        example.query, example.evidence, k, temperature, example_id=example.id
    )
    if degrade_seed is not None:
        samples = [
            degrade_to_heuristic(s, stable_seed(degrade_seed, example.id, "sample", i))
            for i, s in enumerate(samples)
        ]
    sample_facts = [F.extract_facts(s.text, lexicon) for s in samples]
    clusters = E.cluster_answers(samples, sample_facts)
    entropy = E.semantic_entropy(clusters)
    top = E.select_top_answer(samples, clusters)

    qe_score = backend.score_answer(
        example.query, example.evidence, top.text, example_id=example.id
    )
    q_score = backend.score_answer(example.query, None, top.text, example_id=example.id)
    if degrade_seed is not None:
        qe_score = degrade_to_heuristic(qe_score, stable_seed(degrade_seed, example.id, "qe"))
        q_score = degrade_to_heuristic(q_score, stable_seed(degrade_seed, example.id, "q"))

    w_cons = C.consistency_weight(
        F.extract_facts(top.text, lexicon), F.extract_facts(example.evidence, lexicon)
    )
    return C.compute_features(qe_score, q_score, entropy, w_cons)


def extract_all_features(
    config: RunConfig,
    manifest: D.DatasetManifest,
    out_path: str | Path,
    degrade: bool = False,
    backend=None,
) -> dict:
    """Extract features for every example, skipping ids already in out_path.

    Returns an audit dict with backend call counts; calls_made equals
    (k + 2) * n_extracted.
    """
    out_path = Path(out_path)
    existing: dict[str, tuple[str, str, C.FeatureVector]] = {}
    if out_path.exists():
        for row in C.read_features(out_path):
            existing[row[0]] = row

    counter = CallCounter(max_calls=config.budget)
    if backend is None:
        backend = make_backend(config, counter)
        if isinstance(backend, SyntheticBackend):
            worlds = assign_worlds(manifest.examples, config.seed)
            backend.register_all(manifest.examples, worlds)
    else:
        counter = backend.counter

    degrade_seed = stable_seed(config.seed, "degrade") if degrade else None
    ordered = sorted(manifest.examples, key=lambda e: e.id)
    todo = [e for e in ordered if e.id not in existing]

    def extract_one(example: D.QAExample):
        return extract_example_features(
            backend,
            example,
            k=config.k,
            temperature=config.temperature,
            degrade_seed=degrade_seed,
        )

    # Parallel up to max_in_flight; every draw is keyed by (seed, example id)
    # so results are identical regardless of completion order.
    done: dict[str, C.FeatureVector] = {}
    error: Exception | None = None
    workers = max(1, config.backend.max_in_flight)
    if todo:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {example.id: pool.submit(extract_one, example) for example in todo}
            for example_id, future in futures.items():
                try:
                    done[example_id] = future.result()
                except Exception as err:  # noqa: BLE001 - surfaced below with partial output
                    if error is None:
                        error = err

    rows = []
    for example in ordered:
        if example.id in existing:
            rows.append(existing[example.id])
        elif example.id in done:
            rows.append((example.id, example.label, done[example.id]))
    C.write_features(rows, out_path)

    n_extracted = len(done)
    expected = (config.k + 2) * n_extracted
    audit = {
        "n_examples": len(ordered),
        "n_extracted": n_extracted,
        "n_cached": len(existing),
        "calls_made": counter.calls,
        "calls_expected": expected,
        "audit_ok": counter.calls == expected,
        "partial_output": error is not None,
    }
    if error is not None:
        raise PartialExtraction(audit, out_path) from error
    return audit


def run_experiment(config: RunConfig, features_path: str | Path | None = None) -> dict:
    """Evaluate a feature file end to end and write all artifacts.

    Writes report.json, coverage/ablation/ROC CSVs, per-fold and full-data
    models, and a manifest of output file hashes. Returns a summary dict
    with the report and model objects.
    """
    features_path = Path(features_path or Path(config.out_dir) / "features.jsonl")
    rows = C.read_features(features_path)
    ids, y, X = C.features_matrix(rows)

    report, oof, fold_models, full_model = Ev.evaluate(
        X,
        y,
        ids=ids,
        folds=config.folds,
        seed=config.seed,
        reg_strength=config.reg_strength,
        n_resamples=config.bootstrap_resamples,
        include_ablation=config.include_ablation,
        coverage_grid=list(config.coverage_grid),
    )

    out = Path(config.out_dir)
    written = Ev.write_report(report, out, oof=oof, y=y)
    for i, model in enumerate(fold_models):
        path = out / f"model_fold{i}.json"
        De.save_model(model, path)
        written.append(path)
    full_path = out / "model_full.json"
    De.save_model(full_model, full_path)
    written.append(full_path)

    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(
            {p.name: sha256_file(p) for p in sorted(written, key=lambda p: p.name)},
            sort_keys=True,
            indent=1,
        ),
        "utf-8",
    )
    return {
        "report": report,
        "oof": oof,
        "full_model": full_model,
        "fold_models": fold_models,
        "written": written + [manifest_path],
    }


def degradation_experiment(config: RunConfig, manifest: D.DatasetManifest) -> dict:
    """Side-by-side run with real versus heuristic log-probabilities.

    Extracts both feature files, evaluates each, and emits a coefficient
    comparison table with retained-magnitude percentages computed from the
    full-data fits.
    """
    out = Path(config.out_dir)
    real_path = out / "features.jsonl"
    degraded_path = out / "features_degraded.jsonl"
    audit_real = extract_all_features(config, manifest, real_path, degrade=False)
    audit_degraded = extract_all_features(config, manifest, degraded_path, degrade=True)

    real_cfg = replace(config, out_dir=str(out / "real"))
    degraded_cfg = replace(config, out_dir=str(out / "degraded"))
    real = run_experiment(real_cfg, real_path)
    degraded = run_experiment(degraded_cfg, degraded_path)

    w_real = {r["feature"]: r["coefficient"] for r in real["report"].coefficients}
    w_degraded = {r["feature"]: r["coefficient"] for r in degraded["report"].coefficients}
    comparison = []
    for name in C.FEATURE_NAMES:
        wr, wd = w_real[name], w_degraded[name]
        retained = abs(wd) / abs(wr) if abs(wr) > 0 else float("inf")
        comparison.append(
            {
                "feature": name,
                "w_real": wr,
                "w_degraded": wd,
                "retained": retained,
                "sign_flipped": bool(np.sign(wr) != np.sign(wd) and wd != 0.0),
            }
        )
    summary = {
        "auc_real": real["report"].pooled_auc,
        "auc_degraded": degraded["report"].pooled_auc,
        "auc_drop": real["report"].pooled_auc - degraded["report"].pooled_auc,
        "mean_retained_logprob_features": float(
            np.mean([c["retained"] for c in comparison if c["feature"] in LOGPROB_FEATURES])
        ),
        "audit_real": audit_real,
        "audit_degraded": audit_degraded,
        "coefficients": comparison,
    }
    (out / "degradation.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1), "utf-8"
    )
    return {"summary": summary, "real": real, "degraded": degraded}
