"""Shared helpers: seed derivation, canonical JSON, file hashing."""

import hashlib
import json


def derive_seed(master: int, *tags: str) -> int:
    """Derive a purpose-specific 63-bit seed from a master seed and tag strings.

    Stable across platforms and Python versions (pure SHA-256, no hash()).
    """
    payload = ("|".join(tags) + f"|{master}").encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFFFFFFFFFFFFFF


def canonical_json(obj) -> str:
    """Serialize with sorted keys and no whitespace so hashes are reproducible."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
