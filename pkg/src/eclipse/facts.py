"""Rule-based fact extraction for financial QA text.

Extracts lexicon-matched entities, unit-aware numeric values, directional
claims and (entity, attribute, value) triples, and compares fact sets for
contradictions. No statistical NER; everything is deterministic regex and
table lookups so results are reproducible byte for byte.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

# Financial attribute keywords; a numeric or direction word is linked to the
# nearest one within ATTRIBUTE_WINDOW whitespace tokens.
ATTRIBUTE_KEYWORDS = frozenset(
    {
        "revenue", "revenues", "income", "profit", "profits", "earnings",
        "margin", "margins", "eps", "sales", "growth", "expense", "expenses",
        "cost", "costs", "cash", "debt", "assets", "liabilities", "dividend",
        "dividends", "shares", "backlog", "bookings", "guidance", "capex",
        "ebitda", "turnover",
    }
)
ATTRIBUTE_WINDOW = 8

# Directional vocabulary. Polarity drives clustering consistency checks and
# contradiction detection.
DIRECTION_POLARITY = {
    "increased": "up", "increase": "up", "increases": "up", "increasing": "up",
    "rose": "up", "rise": "up", "rises": "up", "risen": "up",
    "grew": "up", "grow": "up", "grows": "up", "growing": "up",
    "climbed": "up", "climb": "up", "climbs": "up",
    "gained": "up", "gain": "up", "gains": "up",
    "improved": "up", "improve": "up", "improves": "up",
    "expanded": "up", "expand": "up", "expands": "up",
    "advanced": "up", "advance": "up", "advances": "up",
    "up": "up", "higher": "up",
    "decreased": "down", "decrease": "down", "decreases": "down",
    "decreasing": "down",
    "fell": "down", "fall": "down", "falls": "down", "fallen": "down",
    "declined": "down", "decline": "down", "declines": "down",
    "declining": "down",
    "dropped": "down", "drop": "down", "drops": "down",
    "lost": "down", "lose": "down", "loses": "down",
    "worsened": "down", "worsen": "down", "worsens": "down",
    "shrank": "down", "shrink": "down", "shrinks": "down",
    "shrinking": "down",
    "contracted": "down", "contract": "down", "contracts": "down",
    "down": "down", "lower": "down",
    "stable": "stable", "flat": "stable", "unchanged": "stable",
    "steady": "stable", "volatile": "stable",
}

# Involutive antonym table used to invert the first directional claim of an
# answer. Every entry maps back to itself after two applications.
_ANTONYM_PAIRS = [
    ("increased", "decreased"), ("increase", "decrease"),
    ("increases", "decreases"), ("increasing", "decreasing"),
    ("rose", "fell"), ("rise", "fall"), ("rises", "falls"),
    ("risen", "fallen"),
    ("grew", "shrank"), ("grow", "shrink"), ("grows", "shrinks"),
    ("growing", "shrinking"),
    ("climbed", "dropped"), ("climb", "drop"), ("climbs", "drops"),
    ("gained", "lost"), ("gain", "lose"), ("gains", "loses"),
    ("improved", "worsened"), ("improve", "worsen"), ("improves", "worsens"),
    ("expanded", "contracted"), ("expand", "contract"),
    ("expands", "contracts"),
    ("advanced", "declined"), ("advance", "decline"),
    ("advances", "declines"),
    ("up", "down"), ("higher", "lower"),
    ("stable", "volatile"),
]
ANTONYMS: dict[str, str] = {}
for _a, _b in _ANTONYM_PAIRS:
    ANTONYMS[_a] = _b
    ANTONYMS[_b] = _a

NUMERIC_TOLERANCE = 0.01  # relative error for two numerics to compare equal

_SUFFIX_SCALE = {
    "k": 1e3, "thousand": 1e3,
    "m": 1e6, "mn": 1e6, "million": 1e6,
    "b": 1e9, "bn": 1e9, "billion": 1e9,
    "t": 1e12, "tn": 1e12, "trillion": 1e12,
}
_CURRENCY_UNIT = {"$": "USD", "€": "EUR", "£": "GBP"}

# Core number with optional currency symbol, attached magnitude letter
# (211B) or spaced magnitude word (211 billion), and percent sign.
_NUMBER_RE = re.compile(
    r"(?<![A-Za-z0-9.,])"
    r"(?P<cur>[$€£])?"
    r"(?P<body>\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+\.\d+|\d+|\.\d+)"
    r"(?:(?P<sfx1>[KMBT])\b|\s(?P<sfx2>bn|mn|tn|thousand|million|billion|trillion)\b)?"
    r"(?P<pct>%|\spercent\b)?",
    re.IGNORECASE,
)

_TOKEN_RE = re.compile(r"\S+")
_WORD_RE = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class NumericMention:
    """One number as written in text, with enough formatting to re-render it."""

    start: int            # span of the full match
    end: int
    body_start: int       # span of just the digits/commas/decimals
    body_end: int
    display_value: float  # value as written (81.8 for "$81.8B")
    scale: float          # suffix multiplier (1e9 for "B")
    unit: str             # "USD", "%", "" ...
    decimals: int
    has_commas: bool

    @property
    def value(self) -> float:
        return self.display_value * self.scale

    @property
    def yearlike(self) -> bool:
        """Bare 4-digit integers in [1900, 2100) are treated as years."""
        return (
            self.scale == 1.0
            and self.unit == ""
            and self.decimals == 0
            and not self.has_commas
            and 1900 <= self.display_value < 2100
        )


@dataclass(frozen=True)
class EntityMention:
    start: int
    end: int
    name: str       # canonical lexicon spelling
    category: str   # company | person


@dataclass
class FactSet:
    """Facts extracted from one piece of text."""

    entities: set[tuple[str, str]] = field(default_factory=set)
    numerics: list[tuple[float, str, str]] = field(default_factory=list)
    directions: list[tuple[str, str, str]] = field(default_factory=list)
    triples: list[tuple[str, str, str]] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.entities or self.numerics or self.directions)

    def as_dict(self) -> dict:
        return {
            "entities": sorted(self.entities),
            "numerics": self.numerics,
            "directions": self.directions,
            "triples": self.triples,
        }


class Lexicon:
    """Entity lexicon: (name, category) pairs matched case-insensitively."""

    def __init__(self, entries: list[tuple[str, str]]):
        self.entries = list(entries)
        self._category = {name.casefold(): cat for name, cat in entries}
        self._canonical = {name.casefold(): name for name, cat in entries}
        names = sorted((name for name, _ in entries), key=len, reverse=True)
        pattern = "|".join(re.escape(n) for n in names)
        self._re = re.compile(rf"\b(?:{pattern})\b", re.IGNORECASE)

    def category(self, name: str) -> str | None:
        return self._category.get(name.casefold())

    def canonical(self, name: str) -> str | None:
        return self._canonical.get(name.casefold())

    def names(self, category: str | None = None) -> list[str]:
        if category is None:
            return [n for n, _ in self.entries]
        return [n for n, c in self.entries if c == category]


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load a "name<TAB>category" lexicon file; defaults to the bundled one."""
    if path is None:
        text = resources.files("eclipse.data").joinpath("entities.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, category = line.partition("\t")
        entries.append((name.strip(), category.strip()))
    return Lexicon(entries)


_DEFAULT_LEXICON: Lexicon | None = None


def default_lexicon() -> Lexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = load_lexicon()
    return _DEFAULT_LEXICON


def sigfig(value: float, figures: int = 3) -> float:
    """Round to the given number of significant figures."""
    if value == 0 or not math.isfinite(value):
        return 0.0 if value == 0 else value
    magnitude = math.floor(math.log10(abs(value)))
    return round(value, figures - 1 - magnitude)


def relative_error(a: float, b: float) -> float:
    """|a-b| / max(|a|,|b|); zero vs zero compares equal (error 0)."""
    if a == b:
        return 0.0
    denom = max(abs(a), abs(b))
    return abs(a - b) / denom


def numeric_values_match(a: float, b: float, tolerance: float = NUMERIC_TOLERANCE) -> bool:
    return relative_error(a, b) <= tolerance


def find_numeric_mentions(text: str) -> list[NumericMention]:
    mentions = []
    for m in _NUMBER_RE.finditer(text):
        body = m.group("body")
        display = float(body.replace(",", ""))
        suffix = (m.group("sfx1") or m.group("sfx2") or "").lower()
        scale = _SUFFIX_SCALE.get(suffix, 1.0)
        if m.group("pct"):
            unit = "%"
        elif m.group("cur"):
            unit = _CURRENCY_UNIT[m.group("cur")]
        else:
            unit = ""
        decimals = len(body.split(".")[1]) if "." in body else 0
        mentions.append(
            NumericMention(
                start=m.start(),
                end=m.end(),
                body_start=m.start("body"),
                body_end=m.end("body"),
                display_value=display,
                scale=scale,
                unit=unit,
                decimals=decimals,
                has_commas="," in body,
            )
        )
    return mentions


def find_entity_mentions(text: str, lexicon: Lexicon | None = None) -> list[EntityMention]:
    lexicon = lexicon or default_lexicon()
    out = []
    for m in lexicon._re.finditer(text):
        name = lexicon.canonical(m.group(0))
        out.append(EntityMention(m.start(), m.end(), name, lexicon.category(name)))
    return out


def compact_value_string(value: float, unit: str = "") -> str:
    """Canonical short form of a numeric fact: 2.11e11 -> "211B"."""
    v = sigfig(value, 3)
    if unit == "%":
        return f"{v:.10g}%"
    for divisor, letter in ((1e12, "T"), (1e9, "B"), (1e6, "M"), (1e3, "K")):
        if abs(v) >= divisor:
            return f"{v / divisor:.10g}{letter}"
    return f"{v:.10g}"


def invert_first_direction(text: str) -> str | None:
    """Swap the first invertible directional keyword for its antonym.

    Returns None when no keyword with a defined antonym is present. The
    replacement preserves leading capitalization.
    """
    for m in re.finditer(r"[A-Za-z]+", text):
        word = m.group(0)
        antonym = ANTONYMS.get(word.lower())
        if antonym is None:
            continue
        if word[0].isupper():
            antonym = antonym.capitalize()
        return text[: m.start()] + antonym + text[m.end():]
    return None


def _tokens_with_spans(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _token_index_at(tokens: list[tuple[str, int, int]], pos: int) -> int:
    for i, (_, start, end) in enumerate(tokens):
        if start <= pos < end:
            return i
    return max(0, len(tokens) - 1)


def _nearest_attribute(tokens, token_idx: int) -> str:
    best = None
    for i in range(len(tokens)):
        dist = abs(i - token_idx)
        if dist > ATTRIBUTE_WINDOW:
            continue
        word = tokens[i][0].strip(".,;:!?()'\"").casefold()
        if word.endswith("'s"):
            word = word[:-2]
        if word in ATTRIBUTE_KEYWORDS:
            if best is None or dist < best[0]:
                best = (dist, word)
    return best[1] if best else "unknown"


def _nearest_entity(entities: list[EntityMention], pos: int) -> str:
    preceding = [e for e in entities if e.start <= pos]
    if preceding:
        return max(preceding, key=lambda e: e.start).name
    following = [e for e in entities if e.start > pos]
    if following:
        return min(following, key=lambda e: e.start).name
    return ""


def extract_facts(text: str, lexicon: Lexicon | None = None) -> FactSet:
    """Extract a FactSet from text. Empty input yields an empty FactSet.

    Each numeric is linked to the nearest financial keyword within 8 tokens
    (attribute "unknown" otherwise) and to the nearest preceding entity.
    Numeric values are normalized to three significant figures; bare
    year-like integers are ignored as fact values.
    """
    lexicon = lexicon or default_lexicon()
    facts = FactSet()
    if not text:
        return facts

    entities = find_entity_mentions(text, lexicon)
    facts.entities = {(e.name, e.category) for e in entities}
    tokens = _tokens_with_spans(text)

    for num in find_numeric_mentions(text):
        if num.yearlike:
            continue
        attribute = _nearest_attribute(tokens, _token_index_at(tokens, num.start))
        value = sigfig(num.value, 3)
        facts.numerics.append((value, num.unit, attribute))
        entity = _nearest_entity(entities, num.start)
        facts.triples.append((entity, attribute, compact_value_string(num.value, num.unit)))

    for m in re.finditer(r"[A-Za-z]+", text):
        polarity = DIRECTION_POLARITY.get(m.group(0).lower())
        if polarity is None:
            continue
        attribute = _nearest_attribute(tokens, _token_index_at(tokens, m.start()))
        entity = _nearest_entity(entities, m.start())
        facts.directions.append((entity, attribute, polarity))

    return facts


def _parse_value_string(value_string: str) -> float | None:
    mentions = find_numeric_mentions(value_string)
    if not mentions:
        return None
    return mentions[0].value


def _numeric_claims(facts: FactSet) -> dict[tuple[str, str], list[float]]:
    claims: dict[tuple[str, str], list[float]] = {}
    for entity, attribute, value_string in facts.triples:
        value = _parse_value_string(value_string)
        if value is None:
            continue
        claims.setdefault((entity, attribute), []).append(value)
    return claims


def _direction_claims(facts: FactSet) -> dict[tuple[str, str], set[str]]:
    claims: dict[tuple[str, str], set[str]] = {}
    for entity, attribute, polarity in facts.directions:
        claims.setdefault((entity, attribute), set()).add(polarity)
    return claims


def facts_contradict(a: FactSet, b: FactSet) -> str:
    """Compare two fact sets: "none", "partial" or "total".

    A matched (entity, attribute) pair conflicts when its directional
    polarities disagree or when no pairing of its numeric values falls
    within 1% relative error. "total" means every matched pair conflicts,
    "partial" means at least one conflicts and at least one agrees.
    """
    conflicts = 0
    agreements = 0

    num_a, num_b = _numeric_claims(a), _numeric_claims(b)
    for key in set(num_a) & set(num_b):
        matched = any(
            numeric_values_match(va, vb) for va in num_a[key] for vb in num_b[key]
        )
        if matched:
            agreements += 1
        else:
            conflicts += 1

    dir_a, dir_b = _direction_claims(a), _direction_claims(b)
    for key in set(dir_a) & set(dir_b):
        if dir_a[key] & dir_b[key]:
            agreements += 1
        else:
            conflicts += 1

    if conflicts == 0:
        return "none"
    if agreements == 0:
        return "total"
    return "partial"
