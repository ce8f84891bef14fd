"""AMCM model checkpoint format.

Layout (little-endian)::

    "AMCM" | version u32 | architecture JSON (len u32 | UTF-8)
    | metadata JSON (len u32 | UTF-8) | n_params u64 | θ as n_params×f64
    | CRC32 u32 over every preceding byte
"""

from __future__ import annotations

import logging

from pathlib import Path
from typing import Any

import numpy as np

from robust_amc.core._json import jsonify
from robust_amc.core.binio import U64, Reader, pack_json, preamble, seal
from robust_amc.errors import DatasetFormatError

from .architecture import Architecture
from .network import ModelParams

_LOG = logging.getLogger(__name__)

MAGIC = b"AMCM"
VERSION = 1


def checkpoint_to_bytes(params: ModelParams, metadata: dict[str, Any] | None = None) -> bytes:
    meta = dict(metadata or {})
    if params.model_id is not None:
        meta.setdefault("model_id", params.model_id)
    return seal(
        preamble(MAGIC, VERSION)
        + pack_json(params.arch.to_dict())
        + pack_json(jsonify(meta))
        + U64.pack(params.theta.size)
        + params.theta.astype("<f8").tobytes()
    )


def checkpoint_from_bytes(buf: bytes) -> tuple[ModelParams, dict[str, Any]]:
    r = Reader(buf, MAGIC, VERSION)
    arch_desc = r.json("architecture descriptor")
    meta = r.json("metadata")
    (n,) = r.unpack(U64, "parameter count")
    raw = r.take(8 * n, f"{n} parameters")
    r.finish()
    try:
        arch = Architecture.from_dict(arch_desc)
        theta = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        params = ModelParams(theta, arch, meta.get("model_id"))
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError("checksum", f"inconsistent checkpoint: {exc}") from exc
    return params, meta


def write_checkpoint(
    params: ModelParams, path: str | Path, metadata: dict[str, Any] | None = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_to_bytes(params, metadata))
    _LOG.debug("checkpoint %r -> %s", params, path)
    return path


def read_checkpoint(path: str | Path) -> tuple[ModelParams, dict[str, Any]]:
    return checkpoint_from_bytes(Path(path).read_bytes())
