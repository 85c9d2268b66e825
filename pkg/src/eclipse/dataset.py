"""Grounded/hallucinated QA dataset records, perturbations and persistence.

Every clean example gets exactly one hallucinated twin produced by one of
four perturbation types (wrong number, entity swap, contradiction,
fabrication). Generation is deterministic given (seed, example id).
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from eclipse import facts as F
from eclipse._util import stable_seed

LABELS = ("clean", "hallucinated")
PERTURBATIONS = ("none", "wrong_number", "entity_swap", "contradiction", "fabrication")
DEFAULT_MIX = {
    "wrong_number": 0.35,
    "entity_swap": 0.25,
    "contradiction": 0.25,
    "fabrication": 0.15,
}
# Order tried when the requested perturbation does not apply to an example.
FALLBACK_ORDER = ("wrong_number", "contradiction", "entity_swap", "fabrication")

DEFAULT_FABRICATION_TEMPLATES = [
    "The company also completed the acquisition of {company} for {amount} during the period.",
    "Management additionally reported {metric} of {amount} for the quarter.",
    "{person} also announced a new {amount} buyback program.",
    "The filing further disclosed a one-time {metric} charge of {amount}.",
]

_FABRICATION_METRICS = [
    "restructuring", "impairment", "licensing", "royalty", "settlement",
    "integration", "severance",
]


class DatasetError(Exception):
    """Base class for dataset construction errors."""


class NoNumericValue(DatasetError):
    pass


class NoDirectionalClaim(DatasetError):
    pass


class NoEntityFound(DatasetError):
    pass


class EmptyPool(DatasetError):
    pass


class EmptyTemplateList(DatasetError):
    pass


@dataclass(frozen=True)
class QAExample:
    id: str
    query: str
    evidence: str
    answer: str
    label: str = "clean"
    perturbation: str = "none"
    source_id: str = ""

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"bad label {self.label!r}")
        if self.perturbation not in PERTURBATIONS:
            raise ValueError(f"bad perturbation {self.perturbation!r}")
        if (self.label == "clean") != (self.perturbation == "none"):
            raise ValueError("label=clean iff perturbation=none")


@dataclass
class DatasetManifest:
    examples: list[QAExample]
    seed: int
    taxonomy_mix: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))

    def __post_init__(self):
        validate_manifest(self)

    def clean(self) -> list[QAExample]:
        return [e for e in self.examples if e.label == "clean"]

    def hallucinated(self) -> list[QAExample]:
        return [e for e in self.examples if e.label == "hallucinated"]


def validate_manifest(manifest: DatasetManifest) -> None:
    clean = {e.id: e for e in manifest.examples if e.label == "clean"}
    hall = [e for e in manifest.examples if e.label == "hallucinated"]
    if len(clean) != len(hall):
        raise ValueError(f"class imbalance: {len(clean)} clean vs {len(hall)} hallucinated")
    mix_total = sum(manifest.taxonomy_mix.values())
    if abs(mix_total - 1.0) > 1e-9:
        raise ValueError(f"taxonomy mix sums to {mix_total}, expected 1.0")
    for h in hall:
        src = clean.get(h.source_id)
        if src is None:
            raise ValueError(f"{h.id}: source_id {h.source_id!r} not found among clean examples")
        if src.query != h.query or src.evidence != h.evidence:
            raise ValueError(f"{h.id}: query/evidence differ from source {src.id}")


# ---------------------------------------------------------------------------
# Perturbations
# ---------------------------------------------------------------------------

def _format_number(value: float, decimals: int, commas: bool) -> str:
    if commas:
        return f"{value:,.{decimals}f}"
    return f"{value:.{decimals}f}"


def apply_numeric_delta(text: str, delta: float, mention_index: int = 0) -> str:
    """Replace one numeric value v in text by v*(1+delta).

    Formatting (decimal places, thousands commas, suffix, currency) follows
    the original; precision is extended only when rounding would push the
    realized relative change outside [0.10, 0.50].
    """
    mentions = [
        m for m in F.find_numeric_mentions(text)
        if not m.yearlike and m.display_value != 0
    ]
    if not mentions:
        raise NoNumericValue("no perturbable numeric value in text")
    mention = mentions[mention_index % len(mentions)]
    target = mention.display_value * (1.0 + delta)

    decimals = mention.decimals
    rendered = _format_number(target, decimals, mention.has_commas)
    while decimals < 12:
        realized = abs(float(rendered.replace(",", "")) - mention.display_value)
        realized /= abs(mention.display_value)
        if 0.10 - 1e-12 <= realized <= 0.50 + 1e-12:
            break
        decimals += 1
        rendered = _format_number(target, decimals, mention.has_commas)
    return text[: mention.body_start] + rendered + text[mention.body_end:]


def perturb_wrong_number(example: QAExample, rng_seed: int) -> QAExample:
    """Scale one numeric value by a factor 1+delta with |delta| in [0.10, 0.50]."""
    if example.label != "clean":
        raise ValueError("perturbations apply to clean examples only")
    rng = np.random.default_rng(stable_seed(rng_seed, example.id, "wrong_number"))
    mentions = [
        m for m in F.find_numeric_mentions(example.answer)
        if not m.yearlike and m.display_value != 0
    ]
    if not mentions:
        raise NoNumericValue(f"{example.id}: answer has no perturbable numeric value")
    index = int(rng.integers(len(mentions)))
    magnitude = rng.uniform(0.10, 0.50)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    new_answer = apply_numeric_delta(example.answer, sign * magnitude, index)
    return replace(
        example,
        id=f"{example.id}-hall",
        answer=new_answer,
        label="hallucinated",
        perturbation="wrong_number",
        source_id=example.id,
    )


def perturb_contradiction(example: QAExample) -> QAExample:
    """Invert the first directional claim via the fixed antonym table."""
    if example.label != "clean":
        raise ValueError("perturbations apply to clean examples only")
    inverted = F.invert_first_direction(example.answer)
    if inverted is None:
        raise NoDirectionalClaim(f"{example.id}: no invertible directional keyword")
    return replace(
        example,
        id=f"{example.id}-hall",
        answer=inverted,
        label="hallucinated",
        perturbation="contradiction",
        source_id=example.id,
    )


def perturb_entity_swap(
    example: QAExample, entity_pool: list[str], rng_seed: int
) -> QAExample:
    """Replace one lexicon entity by a same-category entity absent from evidence."""
    if example.label != "clean":
        raise ValueError("perturbations apply to clean examples only")
    lexicon = F.default_lexicon()
    mentions = F.find_entity_mentions(example.answer, lexicon)
    if not mentions:
        raise NoEntityFound(f"{example.id}: answer contains no lexicon entity")
    target = mentions[0]
    evidence_fold = example.evidence.casefold()
    answer_fold = example.answer.casefold()
    candidates = sorted(
        name
        for name in entity_pool
        if lexicon.category(name) == target.category
        and name.casefold() != target.name.casefold()
        and name.casefold() not in evidence_fold
        and name.casefold() not in answer_fold
    )
    if not candidates:
        raise EmptyPool(f"{example.id}: no eligible replacement entity")
    rng = np.random.default_rng(stable_seed(rng_seed, example.id, "entity_swap"))
    chosen = candidates[int(rng.integers(len(candidates)))]
    new_answer = example.answer[: target.start] + chosen + example.answer[target.end:]
    return replace(
        example,
        id=f"{example.id}-hall",
        answer=new_answer,
        label="hallucinated",
        perturbation="entity_swap",
        source_id=example.id,
    )


def _fabrication_fillers(example: QAExample, rng: np.random.Generator) -> dict[str, str]:
    lexicon = F.default_lexicon()
    blocked = (example.evidence + " " + example.answer).casefold()

    def pick(pool: list[str]) -> str:
        eligible = [p for p in pool if p.casefold() not in blocked]
        if not eligible:
            eligible = pool
        return eligible[int(rng.integers(len(eligible)))]

    # amount: draw until the digit string is absent from the evidence
    for _ in range(64):
        amount = f"${rng.integers(1, 10)}.{rng.integers(0, 10)}B"
        if re.sub(r"[^0-9.]", "", amount) not in example.evidence:
            break
    return {
        "company": pick(lexicon.names("company")),
        "person": pick(lexicon.names("person")),
        "metric": pick(_FABRICATION_METRICS),
        "amount": amount,
    }


def perturb_fabrication(
    example: QAExample, fact_templates: list[str], rng_seed: int
) -> QAExample:
    """Append one templated sentence whose entities/values are absent from evidence."""
    if example.label != "clean":
        raise ValueError("perturbations apply to clean examples only")
    if not fact_templates:
        raise EmptyTemplateList(f"{example.id}: fabrication template list is empty")
    rng = np.random.default_rng(stable_seed(rng_seed, example.id, "fabrication"))
    template = fact_templates[int(rng.integers(len(fact_templates)))]
    sentence = template.format(**_fabrication_fillers(example, rng))
    return replace(
        example,
        id=f"{example.id}-hall",
        answer=example.answer.rstrip() + " " + sentence,
        label="hallucinated",
        perturbation="fabrication",
        source_id=example.id,
    )


def _apply_perturbation(
    example: QAExample, kind: str, seed: int, entity_pool: list[str], templates: list[str]
) -> QAExample:
    if kind == "wrong_number":
        return perturb_wrong_number(example, seed)
    if kind == "contradiction":
        return perturb_contradiction(example)
    if kind == "entity_swap":
        return perturb_entity_swap(example, entity_pool, seed)
    if kind == "fabrication":
        return perturb_fabrication(example, templates, seed)
    raise ValueError(f"unknown perturbation {kind!r}")


def _target_counts(n: int, mix: dict[str, float]) -> dict[str, int]:
    # Largest-remainder rounding over the fixed type order.
    kinds = [k for k in FALLBACK_ORDER if mix.get(k, 0.0) > 0]
    raw = {k: n * mix[k] for k in kinds}
    counts = {k: int(raw[k]) for k in kinds}
    short = n - sum(counts.values())
    by_remainder = sorted(kinds, key=lambda k: (counts[k] - raw[k], k))
    for k in by_remainder[:short]:
        counts[k] += 1
    return counts


def build_dataset(
    clean_examples: list[QAExample],
    mix: dict[str, float] | None = None,
    seed: int = 0,
    entity_pool: list[str] | None = None,
    fact_templates: list[str] | None = None,
) -> DatasetManifest:
    """Pair every clean example with one hallucinated twin.

    Perturbation types are allocated to match mix within rounding; when a
    type does not apply to an example, the next applicable type is used in
    the order wrong_number -> contradiction -> entity_swap -> fabrication.
    """
    mix = dict(DEFAULT_MIX) if mix is None else dict(mix)
    if abs(sum(mix.values()) - 1.0) > 1e-9:
        raise ValueError("taxonomy mix must sum to 1.0")
    for example in clean_examples:
        if example.label != "clean":
            raise ValueError(f"{example.id}: build_dataset expects clean examples")
    if len({e.id for e in clean_examples}) != len(clean_examples):
        raise ValueError("duplicate example ids")

    entity_pool = entity_pool or F.default_lexicon().names()
    fact_templates = fact_templates or DEFAULT_FABRICATION_TEMPLATES

    counts = _target_counts(len(clean_examples), mix)
    assignment: list[str] = []
    for kind in FALLBACK_ORDER:
        assignment.extend([kind] * counts.get(kind, 0))
    rng = np.random.default_rng(stable_seed(seed, "assignment"))
    order = rng.permutation(len(clean_examples))
    assigned = {clean_examples[i].id: assignment[j] for j, i in enumerate(order)}

    examples: list[QAExample] = []
    for example in clean_examples:
        kind = assigned[example.id]
        start = FALLBACK_ORDER.index(kind)
        twin = None
        last_error: Exception | None = None
        for offset in range(len(FALLBACK_ORDER)):
            attempt = FALLBACK_ORDER[(start + offset) % len(FALLBACK_ORDER)]
            try:
                twin = _apply_perturbation(example, attempt, seed, entity_pool, fact_templates)
                break
            except DatasetError as err:
                last_error = err
        if twin is None:
            raise last_error
        examples.append(example)
        examples.append(twin)

    return DatasetManifest(examples=examples, seed=seed, taxonomy_mix=mix)


# ---------------------------------------------------------------------------
# Synthetic clean examples
# ---------------------------------------------------------------------------

_ATTRIBUTE_SPECS = [
    ("revenue", "USD"),
    ("net income", "USD"),
    ("operating margin", "%"),
    ("EPS", "USD_SMALL"),
    ("sales", "USD"),
    ("cash", "USD"),
]
_DIRECTION_VERBS = {"up": ["increased", "rose", "grew"], "down": ["decreased", "fell", "declined"]}
_ANSWER_TAILS = [
    "",
    "",
    ", driven by demand across the segment",
    ", reflecting currency and pricing effects",
    ", in line with the guidance issued earlier in the year",
    ", according to the annual report",
]


def _render_value(kind: str, rng: np.random.Generator) -> str:
    if kind == "%":
        return f"{rng.integers(5, 60)}.{rng.integers(0, 10)}%"
    if kind == "USD_SMALL":
        return f"${rng.integers(1, 20)}.{rng.integers(10, 99)}"
    return f"${rng.integers(2, 300)}.{rng.integers(0, 10)}B"


def generate_clean_examples(n: int, seed: int = 0) -> list[QAExample]:
    """Deterministic templated financial QA examples.

    Every answer carries a company entity, a directional claim and a numeric
    value so that all four perturbation types are applicable.
    """
    lexicon = F.default_lexicon()
    companies = lexicon.names("company")
    people = lexicon.names("person")
    out = []
    for i in range(n):
        rng = np.random.default_rng(stable_seed(seed, "clean", i))
        company = companies[int(rng.integers(len(companies)))]
        person = people[int(rng.integers(len(people)))]
        attribute, value_kind = _ATTRIBUTE_SPECS[int(rng.integers(len(_ATTRIBUTE_SPECS)))]
        direction = "up" if rng.random() < 0.5 else "down"
        verb = _DIRECTION_VERBS[direction][int(rng.integers(3))]
        value = _render_value(value_kind, rng)
        prior = _render_value(value_kind, rng)
        year = int(rng.integers(2019, 2025))
        query = f"What was {company}'s {attribute} in fiscal {year}?"
        evidence = (
            f"In its fiscal {year} report, {company} said {attribute} {verb} to "
            f"{value} from {prior} a year earlier. {person} told analysts the "
            f"result reflected demand trends across the segment."
        )
        tail = _ANSWER_TAILS[int(rng.integers(len(_ANSWER_TAILS)))]
        answer = f"{company}'s {attribute} {verb} to {value} in fiscal {year}{tail}."
        out.append(
            QAExample(id=f"ex{i:04d}", query=query, evidence=evidence, answer=answer)
        )
    return out


# ---------------------------------------------------------------------------
# Persistence: JSONL with a manifest header line
# ---------------------------------------------------------------------------

def write_dataset(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        header = {"seed": manifest.seed, "taxonomy_mix": manifest.taxonomy_mix}
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for example in manifest.examples:
            f.write(json.dumps(asdict(example), sort_keys=True) + "\n")


def read_examples(path: str | Path) -> list[QAExample]:
    """Read examples from JSONL, tolerating a manifest header line and any
    class balance (used for clean-only input files)."""
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            if "id" not in record:
                continue  # header line
            out.append(QAExample(**record))
    return out


def read_dataset(path: str | Path) -> DatasetManifest:
    with open(path, encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    examples = [QAExample(**json.loads(line)) for line in lines[1:]]
    return DatasetManifest(
        examples=examples,
        seed=int(header["seed"]),
        taxonomy_mix={k: float(v) for k, v in header["taxonomy_mix"].items()},
    )
