"""OpenAI-compatible chat-completions client with logprob retrieval.

Implements the same sample/score interface as the synthetic backend.
Scoring uses echo mode: the request carries the answer as an assistant
message with echo=true and the response must return per-token logprobs
whose tokens reassemble the answer exactly; anything else raises
TokenizationMismatch rather than silently approximating.

Raw responses can be persisted to a cache directory keyed by request hash;
cached entries store a response hash so corruption is detected on replay.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from pathlib import Path

import requests

from eclipse._util import canon_json
from eclipse.backend import (
    BackendConfig,
    CallCounter,
    RemoteUnavailable,
    ScoredAnswer,
    TokenizationMismatch,
)

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class CacheCorrupted(Exception):
    """A cached response failed its integrity check."""


class RemoteBackend:
    def __init__(
        self,
        config: BackendConfig,
        counter: CallCounter | None = None,
        cache_dir: str | Path | None = None,
        max_retries: int = 3,
        backoff_s: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.config = config
        self.counter = counter or CallCounter()
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self._session = session or requests.Session()
        self._semaphore = threading.Semaphore(config.max_in_flight)

    # -- wire plumbing ------------------------------------------------------

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.credential_env_var, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _request_hash(self, payload: dict) -> str:
        material = canon_json({"url": self.config.endpoint_url, "payload": payload})
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _cache_load(self, request_hash: str) -> dict | None:
        if self.cache_dir is None:
            return None
        path = self.cache_dir / f"{request_hash}.json"
        if not path.exists():
            return None
        entry = json.loads(path.read_text("utf-8"))
        body = canon_json(entry.get("response"))
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        if entry.get("request_hash") != request_hash or entry.get("response_hash") != digest:
            raise CacheCorrupted(f"cache entry {path.name} failed integrity check")
        return entry["response"]

    def _cache_store(self, request_hash: str, response: dict) -> None:
        if self.cache_dir is None:
            return
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        body = canon_json(response)
        entry = {
            "request_hash": request_hash,
            "response_hash": hashlib.sha256(body.encode("utf-8")).hexdigest(),
            "response": response,
        }
        (self.cache_dir / f"{request_hash}.json").write_text(
            json.dumps(entry, sort_keys=True), "utf-8"
        )

    def _post(self, payload: dict) -> dict:
        request_hash = self._request_hash(payload)
        cached = self._cache_load(request_hash)
        if cached is not None:
            return cached
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                with self._semaphore:
                    resp = self._session.post(
                        self.config.endpoint_url,
                        json=payload,
                        headers=self._headers(),
                        timeout=self.config.timeout_ms / 1000.0,
                    )
            except (requests.ConnectionError, requests.Timeout) as err:
                last_error = err
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last_error = RuntimeError(f"HTTP {resp.status_code}")
                continue
            resp.raise_for_status()
            body = resp.json()
            self._cache_store(request_hash, body)
            return body
        raise RemoteUnavailable(
            f"{self.config.endpoint_url} unavailable after {self.max_retries + 1} attempts: {last_error}"
        )

    # -- response parsing ---------------------------------------------------

    @staticmethod
    def _choice_to_answer(choice: dict) -> ScoredAnswer:
        content = (choice.get("logprobs") or {}).get("content") or []
        if not content:
            raise TokenizationMismatch("response carries no token logprobs")
        return ScoredAnswer(
            text=choice["message"]["content"],
            token_logprobs=tuple(float(t["logprob"]) for t in content),
            finish_reason="length" if choice.get("finish_reason") == "length" else "stop",
        )

    @staticmethod
    def _conditioning(query: str, evidence: str | None) -> str:
        if evidence:
            return f"Evidence:\n{evidence}\n\nQuestion: {query}"
        return f"Question: {query}"

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
        if k < 1:
            raise ValueError("k must be >= 1")
        if temperature < 0:
            raise ValueError("temperature must be >= 0")
        self.counter.consume(k)
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": self._conditioning(query, evidence)}],
            "temperature": temperature,
            "logprobs": True,
            "top_logprobs": 1,
            "n": k,
        }
        body = self._post(payload)
        choices = body.get("choices", [])
        if len(choices) != k:
            raise RemoteUnavailable(f"expected {k} choices, got {len(choices)}")
        return [self._choice_to_answer(c) for c in choices]

    def score_answer(
        self,
        prefix_query: str,
        evidence: str | None,
        answer: str,
        *,
        example_id: str | None = None,
    ) -> ScoredAnswer:
        if not answer:
            raise ValueError("answer must be nonempty")
        self.counter.consume(1)
        payload = {
            "model": self.config.model_name,
            "messages": [
                {"role": "user", "content": self._conditioning(prefix_query, evidence)},
                {"role": "assistant", "content": answer},
            ],
            "temperature": 0.0,
            "logprobs": True,
            "top_logprobs": 1,
            "echo": True,
            "max_tokens": 0,
        }
        body = self._post(payload)
        choices = body.get("choices", [])
        if not choices:
            raise RemoteUnavailable("empty response")
        content = (choices[0].get("logprobs") or {}).get("content") or []
        if not content:
            raise TokenizationMismatch("no echoed token logprobs in response")
        reassembled = "".join(t.get("token", "") for t in content)
        if reassembled.strip() != answer.strip():
            raise TokenizationMismatch(
                "echoed tokens do not reassemble the scored answer"
            )
        return ScoredAnswer(
            text=answer,
            token_logprobs=tuple(float(t["logprob"]) for t in content),
        )
