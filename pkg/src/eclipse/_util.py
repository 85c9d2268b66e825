"""Shared helpers: platform-stable seeding, canonical JSON, file hashing."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def stable_seed(*parts: object) -> int:
    """Derive a 63-bit integer seed from the given parts.

    Uses blake2s over the string rendering of the parts, so the result is
    stable across processes, platforms and Python versions (unlike hash()).
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2s(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def canon_json(obj: object) -> str:
    """Canonical single-line JSON rendering (sorted keys, no whitespace)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
