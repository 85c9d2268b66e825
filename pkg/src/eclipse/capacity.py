"""Log-likelihood decomposition features.

Given the evidence-conditioned and query-only scoring passes of the same
answer, derive the seven detector inputs: semantic entropy H, effective
capacity C_eff = (L_QE - L_Q) * w_cons, the raw sums L_Q and L_QE, the
capacity lift delta_L, the ratio L_QE/L_Q, and the maximum per-token
probability p_max from the evidence-conditioned pass. Features are raw
sums; standardization belongs to the detector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from eclipse import facts as F
from eclipse.backend import ScoredAnswer

FEATURE_NAMES = ("H", "C_eff", "L_Q", "L_QE", "delta_L", "ratio", "p_max")

_CONTRADICTION_WEIGHT = {"none": 1.0, "partial": 0.5, "total": 0.0}


class EmptyTokenList(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    H: float
    C_eff: float
    L_Q: float
    L_QE: float
    delta_L: float
    ratio: float
    p_max: float
    w_cons: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES])

    def as_dict(self) -> dict:
        d = {name: getattr(self, name) for name in FEATURE_NAMES}
        d["w_cons"] = self.w_cons
        return d


def consistency_weight(answer_facts: F.FactSet, evidence_facts: F.FactSet) -> float:
    """1.0 when no answer facts contradict the evidence, 0.5 when some do,
    0.0 when all matched facts contradict."""
    return _CONTRADICTION_WEIGHT[F.facts_contradict(answer_facts, evidence_facts)]


def compute_features(
    qe_score: ScoredAnswer,
    q_score: ScoredAnswer,
    entropy: float,
    w_cons: float,
) -> FeatureVector:
    """Assemble a FeatureVector from the two scoring passes.

    Both passes must score the same answer string. ratio is guarded: when
    |L_Q| < 1e-9 the answer is already near probability one without
    evidence and ratio is defined as 1.0.
    """
    if qe_score.text != q_score.text:
        raise ValueError("scoring passes refer to different answer strings")
    if not qe_score.token_logprobs or not q_score.token_logprobs:
        raise EmptyTokenList("scored answers carry no token logprobs")
    l_qe = float(sum(qe_score.token_logprobs))
    l_q = float(sum(q_score.token_logprobs))
    delta = l_qe - l_q
    ratio = 1.0 if abs(l_q) < 1e-9 else l_qe / l_q
    p_max = float(math.exp(max(qe_score.token_logprobs)))
    return FeatureVector(
        H=float(entropy),
        C_eff=delta * w_cons,
        L_Q=l_q,
        L_QE=l_qe,
        delta_L=delta,
        ratio=ratio,
        p_max=p_max,
        w_cons=float(w_cons),
    )


# ---------------------------------------------------------------------------
# Feature file: JSONL with example id, label, and all eight fields
# ---------------------------------------------------------------------------

def write_features(rows: list[tuple[str, str, FeatureVector]], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for example_id, label, fv in rows:
            record = {"id": example_id, "label": label}
            record.update(fv.as_dict())
            f.write(json.dumps(record, sort_keys=True) + "\n")


def read_features(path: str | Path) -> list[tuple[str, str, FeatureVector]]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            fv = FeatureVector(**{k: record[k] for k in (*FEATURE_NAMES, "w_cons")})
            rows.append((record["id"], record["label"], fv))
    return rows


def features_matrix(
    rows: list[tuple[str, str, FeatureVector]],
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """(ids, y, X): labels as 1 for hallucinated, 0 for clean; X is n x 7."""
    ids = [r[0] for r in rows]
    y = np.array([1 if r[1] == "hallucinated" else 0 for r in rows], dtype=np.int64)
    X = np.stack([r[2].as_array() for r in rows]) if rows else np.empty((0, 7))
    return ids, y, X
