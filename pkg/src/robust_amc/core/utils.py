from __future__ import annotations

import datetime as _dt
import uuid

from hashlib import blake2b
from pathlib import Path
from typing import Any

_DIGEST_SIZE = 16


def utc_now_iso() -> str:
    """Return current UTC timestamp in ISO-8601 with “Z” suffix."""
    return (
        _dt.datetime.now(_dt.timezone.utc)
        .isoformat(timespec="microseconds")
        .replace("+00:00", "Z")
    )


def generate_uuid() -> str:
    """Shorthand for ``str(uuid.uuid4())``"""
    return str(uuid.uuid4())


def hash_bytes(payload: bytes) -> str:
    """blake2b-128 hex digest of *payload*."""
    return blake2b(payload, digest_size=_DIGEST_SIZE).hexdigest()


def hash_file(path: str | Path) -> str:
    h = blake2b(digest_size=_DIGEST_SIZE)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def fingerprint(*parts: Any) -> str:
    """Stable digest over the ``str`` form of every part.

    Dicts are key-sorted first so two equal mappings always fingerprint equal.
    """
    h = blake2b(digest_size=_DIGEST_SIZE)
    for part in parts:
        if isinstance(part, bytes):
            h.update(part)
        elif isinstance(part, dict):
            h.update(str(sorted(part.items())).encode())
        else:
            h.update(str(part).encode())
        h.update(b"\x1f")
    return h.hexdigest()


def derive_seed(master_seed: int, *keys: int | str) -> int:
    """Deterministic 63-bit child seed of *master_seed* for the given keys."""
    digest = blake2b(digest_size=8)
    digest.update(str(master_seed).encode())
    for key in keys:
        digest.update(b"\x1f")
        digest.update(str(key).encode())
    return int.from_bytes(digest.digest(), "little") >> 1
