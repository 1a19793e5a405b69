"""Canonical serialization and FNV-1a-64 hashing.

The digest of a knowledge-base document is FNV-1a-64 over its canonical
JSON bytes: UTF-8, keys sorted lexicographically, arrays sorted by id,
no whitespace. Closure audits compare these digests bit-exactly.
"""
from __future__ import annotations

import json

FNV_OFFSET_BASIS = 14695981039346656037
FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def canonical_bytes(doc: dict) -> bytes:
    """Serialize a document to its canonical byte form.

    Arrays must already be sorted by id by the caller; this handles key
    ordering and whitespace.
    """
    return json.dumps(
        doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")
