"""Canonical byte encodings so equal values always hash equal."""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json_bytes(obj: Any) -> bytes:
    """Compact UTF-8 JSON preserving the dict order the caller built.

    Envelope schemas fix their own key order, so insertion order is the
    canonical order; NaN/Inf are rejected to keep encodings total.
    """
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False).encode("utf-8")


def payload_digest_json(obj: Any) -> bytes:
    """Key-sorted compact JSON for digesting free-form payloads."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False, sort_keys=True).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
