"""Answer sampling and scoring backends.

Two implementations share one interface: a remote OpenAI-compatible client
(eclipse.remote) and the deterministic synthetic oracle defined here. The
oracle stands in for a real model: each example carries a latent world
(grounded_quality, evidence_uses, noise_scale, seed) that fixes how diverse
its sampled answers are and whether evidence conditioning raises the
answer's log-likelihood. Identical seeds give identical emissions
regardless of call order.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, replace

import numpy as np

from eclipse import dataset as D
from eclipse import facts as F
from eclipse._util import stable_seed

FINISH_REASONS = ("stop", "length", "error")


class BackendError(Exception):
    """Base class for backend failures."""


class RemoteUnavailable(BackendError):
    """Remote endpoint unreachable after bounded retries."""


class BudgetExceeded(BackendError):
    """The configured backend call ceiling was hit."""


class TokenizationMismatch(BackendError):
    """The remote API did not echo the scored answer tokens."""


class UnknownExample(BackendError):
    """Synthetic oracle could not resolve a latent world for the request."""


@dataclass(frozen=True)
class ScoredAnswer:
    """An answer string with one natural-log probability per token."""

    text: str
    token_logprobs: tuple[float, ...]
    finish_reason: str = "stop"

    def __post_init__(self):
        object.__setattr__(self, "token_logprobs", tuple(self.token_logprobs))
        if self.finish_reason not in FINISH_REASONS:
            raise ValueError(f"bad finish_reason {self.finish_reason!r}")
        if self.finish_reason != "error" and len(self.token_logprobs) < 1:
            raise ValueError("non-error answers need at least one token logprob")
        if any(lp > 0.0 for lp in self.token_logprobs):
            raise ValueError("token logprobs must be <= 0")

    @property
    def total_logprob(self) -> float:
        return float(sum(self.token_logprobs))


@dataclass
class BackendConfig:
    kind: str = "synthetic"  # synthetic | remote
    endpoint_url: str = ""
    model_name: str = "synthetic-oracle"
    max_in_flight: int = 4
    timeout_ms: int = 30000
    credential_env_var: str = "ECLIPSE_API_KEY"

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class SyntheticWorld:
    """Per-example latent state of the synthetic oracle."""

    grounded_quality: float
    evidence_uses: bool
    noise_scale: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.grounded_quality <= 1.0:
            raise ValueError("grounded_quality must lie in [0, 1]")
        if self.noise_scale < 0.0:
            raise ValueError("noise_scale must be >= 0")


class CallCounter:
    """Thread-safe backend call accounting with an optional ceiling."""

    def __init__(self, max_calls: int | None = None):
        self.max_calls = max_calls
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls

    def consume(self, n: int) -> None:
        with self._lock:
            if self.max_calls is not None and self._calls + n > self.max_calls:
                raise BudgetExceeded(
                    f"call budget {self.max_calls} exceeded ({self._calls} used, {n} requested)"
                )
            self._calls += n

    def reset(self) -> None:
        with self._lock:
            self._calls = 0


# ---------------------------------------------------------------------------
# Synthetic oracle
# ---------------------------------------------------------------------------

_PARAPHRASE_PREFIXES = (
    "",
    "According to the filing, ",
    "Based on the provided context, ",
    "The records indicate that ",
)
# Numeric jitter factors for the alternative (wrong-fact) answer variants;
# pairwise more than 1% apart so each variant is its own semantic cluster.
_VARIANT_JITTERS = (0.08, -0.12, 0.25, -0.30)


def _jitter_numeric(text: str, factor: float) -> str | None:
    try:
        return D.apply_numeric_delta(text, factor, 0)
    except D.NoNumericValue:
        return None


def _swap_entity(text: str) -> str | None:
    lexicon = F.default_lexicon()
    mentions = F.find_entity_mentions(text, lexicon)
    if not mentions:
        return None
    target = mentions[0]
    fold = text.casefold()
    for name in lexicon.names(target.category):
        if name.casefold() != target.name.casefold() and name.casefold() not in fold:
            return text[: target.start] + name + text[target.end:]
    return None


def _alternative_variant(reference: str, m: int) -> str:
    """The m-th wrong-fact variant of the reference answer (m in 0..3).

    Prefers a numeric jitter specific to m, then a direction flip, then an
    entity swap. Factless references fall back to distinct marker strings,
    which the clustering string-fallback keeps apart.
    """
    preferred = ["jitter", "jitter", "flip", "jitter"]
    chain = [preferred[m], "flip", "swap"] if preferred[m] == "jitter" else ["flip", "jitter", "swap"]
    for transform in chain:
        if transform == "jitter":
            candidate = _jitter_numeric(reference, _VARIANT_JITTERS[m])
        elif transform == "flip":
            candidate = F.invert_first_direction(reference)
        else:
            candidate = _swap_entity(reference)
        if candidate is not None and candidate != reference:
            return candidate
    return f"{reference} Alternative reading {m + 1}."


def _first_sentence(text: str) -> str:
    m = re.search(r"[.!?](\s|$)", text)
    return text[: m.end()].strip() if m else text.strip()


class SyntheticBackend:
    """Deterministic oracle emitting answers and token log-probabilities.

    Register dataset examples (with their worlds) so twin examples that
    share a query resolve unambiguously via example_id. Unregistered
    queries get a world derived from hashing the request, which keeps the
    backend usable standalone.
    """

    def __init__(
        self,
        config: BackendConfig | None = None,
        seed: int = 0,
        counter: CallCounter | None = None,
    ):
        self.config = config or BackendConfig(kind="synthetic")
        self.seed = seed
        self.counter = counter or CallCounter()
        self._worlds: dict[str, SyntheticWorld] = {}
        self._references: dict[str, str] = {}
        self._ids_by_query: dict[str, list[str]] = {}

    def register(self, example: D.QAExample, world: SyntheticWorld) -> None:
        self._worlds[example.id] = world
        self._references[example.id] = example.answer
        self._ids_by_query.setdefault(example.query, []).append(example.id)

    def register_all(self, examples, worlds: dict[str, SyntheticWorld]) -> None:
        for example in examples:
            self.register(example, worlds[example.id])

    # -- world resolution ---------------------------------------------------

    def _adhoc(self, query: str, evidence: str | None) -> tuple[SyntheticWorld, str]:
        key = stable_seed(self.seed, "adhoc", query, evidence or "")
        rng = np.random.default_rng(key)
        world = SyntheticWorld(
            grounded_quality=float(rng.uniform(0.3, 0.9)),
            evidence_uses=bool(rng.random() < 0.5),
            noise_scale=0.3,
            seed=key,
        )
        if evidence:
            reference = _first_sentence(evidence)
        else:
            reference = f"The reported revenue was ${rng.integers(2, 300)}.{rng.integers(0, 10)}B."
        return world, reference

    def _resolve(
        self, query: str, evidence: str | None, example_id: str | None
    ) -> tuple[SyntheticWorld, str]:
        if example_id is not None:
            if example_id not in self._worlds:
                raise UnknownExample(f"example {example_id!r} is not registered")
            return self._worlds[example_id], self._references[example_id]
        ids = self._ids_by_query.get(query, [])
        if len(ids) == 1:
            return self._worlds[ids[0]], self._references[ids[0]]
        if len(ids) > 1:
            raise UnknownExample(
                f"query matches {len(ids)} registered examples; pass example_id"
            )
        return self._adhoc(query, evidence)

    # -- emission laws ------------------------------------------------------

    def _token_logprobs(
        self, world: SyntheticWorld, text: str, with_evidence: bool
    ) -> np.ndarray:
        tokens = text.split()
        n = max(len(tokens), 1)
        base = np.random.default_rng(stable_seed(world.seed, "base", text))
        surprisal = base.uniform(0.5, 2.5, n)
        if with_evidence:
            if world.evidence_uses:
                lift = np.random.default_rng(stable_seed(world.seed, "lift", text))
                surprisal = surprisal * (1.0 - lift.uniform(0.15, 0.55, n))
            elif world.noise_scale > 0.0:
                noise = np.random.default_rng(stable_seed(world.seed, "noise", text))
                delta = noise.uniform(-1.0, 1.0, n) * (world.noise_scale / math.sqrt(n))
                surprisal = np.maximum(surprisal + delta, 0.01)
        return -surprisal

    def _variant_weights(self, quality: float) -> np.ndarray:
        shares = np.array([0.4, 0.3, 0.2, 0.1])
        return np.concatenate(([max(quality, 1e-9)], (1.0 - quality) * shares))

    # -- interface ----------------------------------------------------------

    def sample_answers(
        self,
        query: str,
        evidence: str,
        k: int,
        temperature: float,
        *,
        example_id: str | None = None,
    ) -> list[ScoredAnswer]:
        """Draw k answers from the example's answer family.

        Diversity grows with 1 - grounded_quality; temperature 0 returns the
        modal answer k times. Sampled answers carry evidence-conditioned
        token log-probabilities.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if temperature < 0:
            raise ValueError("temperature must be >= 0")
        self.counter.consume(k)
        world, reference = self._resolve(query, evidence, example_id)
        weights = self._variant_weights(world.grounded_quality)

        if temperature == 0.0:
            choice = int(np.argmax(weights))
            texts = [_PARAPHRASE_PREFIXES[0] + reference if choice == 0
                     else _alternative_variant(reference, choice - 1)] * k
        else:
            p = weights ** (0.7 / temperature)
            p = p / p.sum()
            rng = np.random.default_rng(stable_seed(world.seed, "samples", temperature))
            draws = rng.choice(len(weights), size=k, p=p)
            texts = []
            paraphrase_count = 0
            for v in draws:
                if v == 0:
                    prefix = _PARAPHRASE_PREFIXES[paraphrase_count % len(_PARAPHRASE_PREFIXES)]
                    texts.append(prefix + reference)
                    paraphrase_count += 1
                else:
                    texts.append(_alternative_variant(reference, int(v) - 1))

        with_evidence = bool(evidence)
        return [
            ScoredAnswer(t, tuple(self._token_logprobs(world, t, with_evidence)))
            for t in texts
        ]

    def score_answer(
        self,
        prefix_query: str,
        evidence: str | None,
        answer: str,
        *,
        example_id: str | None = None,
    ) -> ScoredAnswer:
        """Token log-probabilities for the answer under the given conditioning.

        With evidence the sum is the evidence-conditioned log-likelihood;
        without, the query-only one. For evidence-using worlds the lift is
        strictly positive per token; for evidence-ignoring worlds the two
        sums differ by bounded noise (|delta| <= noise_scale * sqrt(tokens)).
        """
        if not answer:
            raise ValueError("answer must be nonempty")
        self.counter.consume(1)
        world, _ = self._resolve(prefix_query, evidence, example_id)
        with_evidence = evidence is not None and evidence != ""
        return ScoredAnswer(answer, tuple(self._token_logprobs(world, answer, with_evidence)))


def degrade_to_heuristic(scored: ScoredAnswer, seed: int) -> ScoredAnswer:
    """Replace real token log-probabilities with surface-feature estimates.

    The heuristic sees only answer length and digit density plus seeded
    noise, mimicking scoring through an API without logprob access. The
    leading token is pinned to a fixed high-confidence value, so the
    maximum token probability becomes a constant, uninformative feature.
    Token count is preserved.
    """
    n = len(scored.token_logprobs)
    text = scored.text
    chars = max(len(text), 1)
    digit_density = sum(c.isdigit() for c in text) / chars
    base = -(0.2 + 1.2 * digit_density + 0.003 * min(chars, 400))
    rng = np.random.default_rng(stable_seed(seed, "degrade", text))
    values = base + rng.normal(0.0, 0.15, n)
    values = np.minimum(values, -0.02)
    values[0] = -0.01
    return replace(scored, token_logprobs=tuple(values))


def assign_worlds(
    examples,
    seed: int,
    quality_clean: tuple[float, float] = (0.5, 0.95),
    quality_hallucinated: tuple[float, float] = (0.38, 0.92),
    noise_scale: float = 0.3,
    flip_clean: float = 0.08,
    flip_hallucinated: float = 0.12,
) -> dict[str, SyntheticWorld]:
    """Latent worlds for a labeled dataset.

    Clean examples mostly use their evidence; hallucinated ones mostly
    ignore it. A minority of each class gets the other class's evidence
    behavior so separation is imperfect; among hallucinated examples only
    entity-swap and fabrication twins are eligible (their answers do not
    directly contradict the evidence, so evidence use is coherent). The
    grounded-quality ranges overlap heavily so entropy alone separates the
    classes only weakly.
    """
    worlds = {}
    for example in examples:
        rng = np.random.default_rng(stable_seed(seed, "world", example.id))
        clean = example.label == "clean"
        lo, hi = quality_clean if clean else quality_hallucinated
        if clean:
            flip = rng.random() < flip_clean
        else:
            eligible = example.perturbation in ("entity_swap", "fabrication")
            flip = eligible and rng.random() < flip_hallucinated
        worlds[example.id] = SyntheticWorld(
            grounded_quality=float(rng.uniform(lo, hi)),
            evidence_uses=clean ^ flip,
            noise_scale=noise_scale,
            seed=stable_seed(seed, "emissions", example.id),
        )
    return worlds
