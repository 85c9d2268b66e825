"""Command line interface.

Subcommands: dataset synth/build, features extract, train, eval, ablate,
coverage, degrade, theory certify. Exit codes: 0 success, 2 usage (click),
3 data/input errors, 4 backend errors, 5 budget exceeded, 6 cache
corruption.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from eclipse import capacity as C
from eclipse import dataset as D
from eclipse import detector as De
from eclipse import evaluation as Ev
from eclipse import metrics as M
from eclipse import pipeline as P
from eclipse import theory as T
from eclipse.backend import BackendConfig, BackendError, BudgetExceeded

EXIT_DATA = 3
EXIT_BACKEND = 4
EXIT_BUDGET = 5
EXIT_CACHE = 6


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    from eclipse.remote import CacheCorrupted

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except P.PartialExtraction as err:
            code = EXIT_BUDGET if isinstance(err.__cause__, BudgetExceeded) else EXIT_BACKEND
            _fail(code, str(err))
        except BudgetExceeded as err:
            _fail(EXIT_BUDGET, str(err))
        except CacheCorrupted as err:
            _fail(EXIT_CACHE, str(err))
        except BackendError as err:
            _fail(EXIT_BACKEND, str(err))
        except (D.DatasetError, M.MetricError, De.DetectorError, ValueError, OSError) as err:
            _fail(EXIT_DATA, str(err))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _parse_mix(text: str | None) -> dict | None:
    if not text:
        return None
    mix = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        mix[key.strip()] = float(value)
    return mix


def _load_run_config(config_file: str | None, **overrides) -> P.RunConfig:
    values: dict = {}
    if config_file:
        values = P.parse_config_file(config_file)
    backend = BackendConfig(
        kind=str(overrides.pop("backend_kind", None) or values.pop("backend_kind", "synthetic")),
        endpoint_url=str(overrides.pop("endpoint_url", None) or values.pop("endpoint_url", "")),
        model_name=str(overrides.pop("model_name", None) or values.pop("model_name", "synthetic-oracle")),
    )
    config = P.RunConfig(backend=backend)
    for key, value in values.items():
        config = replace(config, **{key: value})
    for key, value in overrides.items():
        if value is not None:
            config = replace(config, **{key: value})
    return config


@click.group()
def main():
    """Semantic-entropy + evidence-capacity hallucination detection."""


# -- dataset ----------------------------------------------------------------

@main.group()
def dataset():
    """Build and inspect QA datasets."""


@dataset.command("synth")
@click.option("--n", type=int, default=100, show_default=True, help="number of clean examples")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_guarded
def dataset_synth(n, seed, out_path):
    """Generate templated clean financial QA examples (JSONL)."""
    examples = D.generate_clean_examples(n, seed)
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"seed": seed, "taxonomy_mix": dict(D.DEFAULT_MIX)}, sort_keys=True) + "\n")
        for example in examples:
            f.write(json.dumps(example.__dict__, sort_keys=True) + "\n")
    click.echo(f"wrote {len(examples)} clean examples to {path}")


@dataset.command("build")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mix", "mix_text", default=None, help="wrong_number=0.35,entity_swap=0.25,...")
@_guarded
def dataset_build(in_path, out_path, seed, mix_text):
    """Pair clean examples with hallucinated twins."""
    clean = [e for e in D.read_examples(in_path) if e.label == "clean"]
    manifest = D.build_dataset(clean, mix=_parse_mix(mix_text), seed=seed)
    D.write_dataset(manifest, out_path)
    counts: dict[str, int] = {}
    for example in manifest.hallucinated():
        counts[example.perturbation] = counts.get(example.perturbation, 0) + 1
    click.echo(f"wrote {len(manifest.examples)} examples to {out_path} ({counts})")


# -- features ---------------------------------------------------------------

@main.group()
def features():
    """Feature extraction."""


@features.command("extract")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_file", default=None, type=click.Path(exists=True))
@click.option("--backend", "backend_kind", default=None, type=click.Choice(["synthetic", "remote"]))
@click.option("--endpoint-url", default=None)
@click.option("--model-name", default=None)
@click.option("--k", type=int, default=None, help="samples per example [default: 10]")
@click.option("--temperature", type=float, default=None, help="[default: 0.7]")
@click.option("--seed", type=int, default=None, help="[default: 0]")
@click.option("--cache-dir", default=None, type=click.Path())
@click.option("--budget", type=int, default=None, help="max backend calls")
@click.option("--degrade", is_flag=True, help="replace logprobs with surface heuristics")
@_guarded
def features_extract(dataset_path, out_path, config_file, backend_kind, endpoint_url,
                     model_name, k, temperature, seed, cache_dir, budget, degrade):
    """Extract one FeatureVector per example (K+2 backend calls each)."""
    config = _load_run_config(
        config_file,
        backend_kind=backend_kind, endpoint_url=endpoint_url, model_name=model_name,
        k=k, temperature=temperature, seed=seed, cache_dir=cache_dir, budget=budget,
        dataset_path=dataset_path,
    )
    manifest = D.read_dataset(dataset_path)
    audit = P.extract_all_features(config, manifest, out_path, degrade=degrade)
    click.echo(json.dumps(audit, sort_keys=True))
    if not audit["audit_ok"]:
        _fail(EXIT_BACKEND, "call-count audit failed")


# -- train / eval -----------------------------------------------------------

@main.command("train")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--C", "reg_strength", type=float, default=1.0, show_default=True,
              help="inverse regularization strength")
@_guarded
def train(features_path, out_path, reg_strength):
    """Fit the detector on all rows of a feature file."""
    ids, y, X = C.features_matrix(C.read_features(features_path))
    model = De.train_detector(X, y, reg_strength=reg_strength)
    De.save_model(model, out_path)
    for row in De.coefficient_report(model):
        flag = "ok" if row["match"] else "MISMATCH"
        click.echo(f"{row['feature']:>8}  {row['coefficient']:+.4f}  expected {row['expected_sign']}  {flag}")
    click.echo(f"threshold {model.threshold:.4f} -> {out_path}")


@main.command("eval")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="out", show_default=True, type=click.Path())
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--bootstrap", "n_resamples", type=int, default=1000, show_default=True)
@click.option("--C", "reg_strength", type=float, default=1.0, show_default=True)
@click.option("--ablation/--no-ablation", default=True, show_default=True)
@_guarded
def eval_cmd(features_path, out_dir, folds, seed, n_resamples, reg_strength, ablation):
    """Cross-validated evaluation with bootstrap CI and coverage curve."""
    config = P.RunConfig(
        out_dir=out_dir, folds=folds, seed=seed, bootstrap_resamples=n_resamples,
        reg_strength=reg_strength, include_ablation=ablation,
    )
    result = P.run_experiment(config, features_path)
    report = result["report"]
    auc = report.summary["roc_auc"]
    click.echo(
        f"AUC {auc['mean']:.3f} +- {auc['std']:.3f} "
        f"(bootstrap CI [{report.bootstrap['lo']:.3f}, {report.bootstrap['hi']:.3f}]); "
        f"artifacts in {out_dir}"
    )


@main.command("ablate")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--C", "reg_strength", type=float, default=1.0, show_default=True)
@_guarded
def ablate(features_path, folds, seed, reg_strength):
    """Feature-set ladder: each rung adds features to the previous one."""
    ids, y, X = C.features_matrix(C.read_features(features_path))
    rows = Ev.ablation_ladder(X, y, folds=folds, seed=seed, reg_strength=reg_strength)
    for row in rows:
        delta = "" if row["delta"] is None else f"  ({row['delta']:+.3f})"
        click.echo(f"{'+'.join(row['features']):<40} AUC {row['auc']:.3f}{delta}")


@main.command("coverage")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--C", "reg_strength", type=float, default=1.0, show_default=True)
@_guarded
def coverage_cmd(features_path, folds, seed, reg_strength):
    """Coverage versus hallucination-rate among accepted examples."""
    ids, y, X = C.features_matrix(C.read_features(features_path))
    _, oof, _ = Ev.cross_validate(X, y, folds=folds, seed=seed, reg_strength=reg_strength)
    for point in M.coverage_curve(oof, y, ids=ids):
        click.echo(
            f"coverage {point['coverage']:.1f}  accepted {point['n_accepted']:>4}  "
            f"hallucination rate {point['hallucination_rate']:.3f}"
        )


@main.command("degrade")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="out", show_default=True, type=click.Path())
@click.option("--config", "config_file", default=None, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="[default: 0]")
@_guarded
def degrade_cmd(dataset_path, out_dir, config_file, seed):
    """Rerun the pipeline with heuristic logprobs; emit coefficient table."""
    config = _load_run_config(config_file, seed=seed, out_dir=out_dir, dataset_path=dataset_path)
    manifest = D.read_dataset(dataset_path)
    result = P.degradation_experiment(config, manifest)
    summary = result["summary"]
    click.echo(f"AUC real {summary['auc_real']:.3f} -> degraded {summary['auc_degraded']:.3f}")
    for row in summary["coefficients"]:
        retained = f"{100 * row['retained']:.0f}%" if np.isfinite(row["retained"]) else "n/a"
        flip = " (sign flipped)" if row["sign_flipped"] else ""
        click.echo(
            f"{row['feature']:>8}  real {row['w_real']:+.4f}  degraded {row['w_degraded']:+.4f}  "
            f"retained {retained}{flip}"
        )


# -- theory -----------------------------------------------------------------

@main.group()
def theory():
    """Entropy-capacity objective tools."""


@theory.command("certify")
@click.option("--alpha", type=float, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--a", type=float, required=True)
@click.option("--b", type=float, default=1.0, show_default=True)
@click.option("--c", type=float, default=0.0, show_default=True)
@click.option("--hpref", type=float, default=1.0, show_default=True)
@click.option("--cap", "capacity", type=float, default=0.0, show_default=True)
@click.option("--grid-points", type=int, default=4001, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path())
@_guarded
def theory_certify(alpha, lam, a, b, c, hpref, capacity, grid_points, out_path):
    """Certify strict convexity on a grid and by two-sided descent."""
    params = T.ObjectiveParams(alpha=alpha, lam=lam, a=a, b=b, c=c, h_pref=hpref, capacity=capacity)
    certificate = T.certify_convexity(params, grid_points=grid_points)
    payload = certificate.to_json()
    if out_path:
        Path(out_path).write_text(payload + "\n", "utf-8")
    click.echo(payload)


if __name__ == "__main__":
    main()
