"""Semantic clustering of sampled answers and entropy over clusters.

Answers are grouped by factual content: entity overlap (Jaccard >= 0.5),
numeric agreement within 1% relative error, and consistent directional
claims. Clustering is greedy and representative-based: an answer joins the
first cluster whose representative matches, so the relation need not be
transitive for the result to be well-defined.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from eclipse import facts as F
from eclipse.backend import ScoredAnswer

JACCARD_THRESHOLD = 0.5


@dataclass
class Cluster:
    members: list[int]
    representative: int
    facts: F.FactSet


@dataclass
class ClusterSet:
    clusters: list[Cluster]
    probabilities: list[float]
    # indices of answers whose own facts disagree internally (multi-fact
    # conflicts); flagged rather than split into sub-answers
    warnings: list[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return sum(len(c.members) for c in self.clusters)

    def as_dict(self) -> dict:
        return {
            "probabilities": self.probabilities,
            "clusters": [
                {
                    "members": c.members,
                    "representative": c.representative,
                    "facts": c.facts.as_dict(),
                }
                for c in self.clusters
            ],
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _entity_sets_compatible(a: F.FactSet, b: F.FactSet) -> bool:
    if not a.entities and not b.entities:
        # no entity evidence either way; other fact categories decide
        return True
    union = a.entities | b.entities
    inter = a.entities & b.entities
    return len(inter) / len(union) >= JACCARD_THRESHOLD


def _numerics_compatible(a: F.FactSet, b: F.FactSet) -> bool:
    by_key_a: dict[tuple[str, str], list[float]] = {}
    by_key_b: dict[tuple[str, str], list[float]] = {}
    for value, unit, attribute in a.numerics:
        by_key_a.setdefault((attribute, unit), []).append(value)
    for value, unit, attribute in b.numerics:
        by_key_b.setdefault((attribute, unit), []).append(value)
    for key in set(by_key_a) & set(by_key_b):
        va = sorted(by_key_a[key])
        vb = sorted(by_key_b[key])
        for x, y in zip(va, vb):
            if not F.numeric_values_match(x, y):
                return False
    return True


def _directions_compatible(a: F.FactSet, b: F.FactSet) -> bool:
    dir_a: dict[tuple[str, str], set[str]] = {}
    dir_b: dict[tuple[str, str], set[str]] = {}
    for entity, attribute, polarity in a.directions:
        dir_a.setdefault((entity, attribute), set()).add(polarity)
    for entity, attribute, polarity in b.directions:
        dir_b.setdefault((entity, attribute), set()).add(polarity)
    for key in set(dir_a) & set(dir_b):
        if not dir_a[key] & dir_b[key]:
            return False
    return True


def same_cluster(a: F.FactSet, b: F.FactSet, text_a: str = "", text_b: str = "") -> bool:
    """True when two answers express the same facts.

    Both fact sets empty falls back to case-normalized exact string match
    of the raw answers.
    """
    if a.is_empty() and b.is_empty():
        return text_a.strip().casefold() == text_b.strip().casefold()
    return (
        _entity_sets_compatible(a, b)
        and _numerics_compatible(a, b)
        and _directions_compatible(a, b)
    )


def _internally_conflicting(facts: F.FactSet) -> bool:
    by_key: dict[tuple[str, str], list[float]] = {}
    for entity, attribute, value_string in facts.triples:
        value = F._parse_value_string(value_string)
        if value is not None:
            by_key.setdefault((entity, attribute), []).append(value)
    for values in by_key.values():
        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                if not F.numeric_values_match(values[i], values[j]):
                    return True
    directions: dict[tuple[str, str], set[str]] = {}
    for entity, attribute, polarity in facts.directions:
        directions.setdefault((entity, attribute), set()).add(polarity)
    return any(len(pol) > 1 for pol in directions.values())


def cluster_answers(answers: list[ScoredAnswer], facts: list[F.FactSet]) -> ClusterSet:
    """Greedy sequential assignment against cluster representatives.

    Each answer joins the first existing cluster whose representative
    matches under same_cluster, else founds a new cluster (representative =
    first member).
    """
    if len(answers) != len(facts):
        raise ValueError("answers and facts must align")
    if len(answers) < 1:
        raise ValueError("need at least one answer")
    clusters: list[Cluster] = []
    warnings = []
    for i, (answer, fact) in enumerate(zip(answers, facts)):
        if _internally_conflicting(fact):
            warnings.append(i)
        placed = False
        for cluster in clusters:
            rep_text = answers[cluster.representative].text
            if same_cluster(fact, cluster.facts, answer.text, rep_text):
                cluster.members.append(i)
                placed = True
                break
        if not placed:
            clusters.append(Cluster(members=[i], representative=i, facts=fact))
    k = len(answers)
    probabilities = [len(c.members) / k for c in clusters]
    return ClusterSet(clusters=clusters, probabilities=probabilities, warnings=warnings)


def semantic_entropy(clusters: ClusterSet) -> float:
    """Entropy in nats of the empirical cluster distribution; 0*log0 := 0."""
    total = math.fsum(clusters.probabilities)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"cluster probabilities sum to {total}, expected 1")
    return -math.fsum(p * math.log(p) for p in clusters.probabilities if p > 0.0)


def select_top_answer(answers: list[ScoredAnswer], clusters: ClusterSet) -> ScoredAnswer:
    """Representative of the largest cluster.

    Ties go to the representative with the highest total log-probability,
    then to the lowest representative index.
    """
    if not clusters.clusters:
        raise ValueError("empty cluster set")
    best = min(
        clusters.clusters,
        key=lambda c: (
            -len(c.members),
            -answers[c.representative].total_logprob,
            c.representative,
        ),
    )
    return answers[best.representative]
