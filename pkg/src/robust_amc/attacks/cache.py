"""AMCP perturbation file format and an on-disk cache of crafted perturbations.

Layout (little-endian)::

    "AMCP" | version u32 | provenance JSON (len u32 | UTF-8)
    | n_frames u64 (0 = universal) | λ u32 | δ as f32
    | CRC32 u32 over every preceding byte
"""

from __future__ import annotations

import logging
import struct

from pathlib import Path
from typing import Any

import numpy as np

from pydantic import ValidationError

from robust_amc.core.binio import Reader, pack_json, preamble, seal
from robust_amc.core.utils import fingerprint
from robust_amc.errors import DatasetFormatError
from robust_amc.models import ModelParams, model_hash
from robust_amc.signals import LabeledDataset, dataset_hash

from .craft import craft
from .projection import project
from .spec import AttackSpec, Perturbation, spec_hash

_LOG = logging.getLogger(__name__)

MAGIC = b"AMCP"
VERSION = 1
_GEOMETRY = struct.Struct("<QI")


def perturbation_to_bytes(pert: Perturbation, provenance: dict[str, Any] | None = None) -> bytes:
    meta = dict(provenance or {})
    meta.update(
        method=pert.spec.method.value,
        spec=pert.spec.model_dump(mode="json"),
        epsilon=pert.epsilon,
        substitute_id=pert.substitute_id,
    )
    n = 0 if pert.universal else pert.delta.shape[0]
    return seal(
        preamble(MAGIC, VERSION)
        + pack_json(meta)
        + _GEOMETRY.pack(n, pert.length)
        + pert.delta.astype("<f4").tobytes()
    )


def perturbation_from_bytes(buf: bytes) -> tuple[Perturbation, dict[str, Any]]:
    """Decode an AMCP payload; δ is re-projected onto its budget after float32 rounding."""
    r = Reader(buf, MAGIC, VERSION)
    meta = r.json("provenance")
    n, length = r.unpack(_GEOMETRY)
    shape = (2, length) if n == 0 else (n, 2, length)
    raw = r.take(4 * int(np.prod(shape)), "perturbation payload")
    r.finish()
    try:
        spec = AttackSpec.model_validate(meta["spec"])
        epsilon = float(meta["epsilon"])
        delta = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)
        pert = Perturbation(project(delta, epsilon, spec.p), spec, epsilon, meta.get("substitute_id"))
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise DatasetFormatError("checksum", f"inconsistent perturbation file: {exc}") from exc
    return pert, meta


def write_perturbation(pert: Perturbation, path: str | Path, provenance: dict[str, Any] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(perturbation_to_bytes(pert, provenance))
    return path


def read_perturbation(path: str | Path) -> tuple[Perturbation, dict[str, Any]]:
    return perturbation_from_bytes(Path(path).read_bytes())


class PerturbationCache:
    """Directory of AMCP files keyed by (attack spec, substitute, dataset).

    A miss crafts, writes, and returns the decoded file so hits and misses
    yield identical perturbations.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    def key(self, spec: AttackSpec, params: ModelParams, ds: LabeledDataset) -> str:
        return fingerprint(spec_hash(spec), model_hash(params), dataset_hash(ds))

    def path_for(self, spec: AttackSpec, params: ModelParams, ds: LabeledDataset) -> Path:
        return self.root / f"{self.key(spec, params, ds)}.amcp"

    def get_or_craft(
        self,
        spec: AttackSpec,
        params: ModelParams,
        ds: LabeledDataset,
        *,
        substitute_id: str | None = None,
    ) -> Perturbation:
        path = self.path_for(spec, params, ds)
        if path.exists():
            try:
                pert, _ = read_perturbation(path)
                self.hits += 1
                return pert
            except DatasetFormatError as exc:
                _LOG.warning("discarding unreadable cache entry %s: %s", path.name, exc)

        self.misses += 1
        pert = craft(spec, params, ds, substitute_id=substitute_id)
        provenance = {
            "substitute_hash": model_hash(params),
            "dataset_hash": dataset_hash(ds),
        }
        write_perturbation(pert, path, provenance)
        loaded, _ = read_perturbation(path)
        return loaded
