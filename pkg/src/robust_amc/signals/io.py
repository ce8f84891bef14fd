"""AMCD dataset file format.

Layout (little-endian)::

    "AMCD" | version u32 | λ u32 | C u32 | n_frames u64
    | C × (len u32 | UTF-8 class name)
    | n_frames × (λ×f32 I | λ×f32 Q | label u32 | snr_db i32)
    | CRC32 u32 over every preceding byte
"""

from __future__ import annotations

import logging
import struct

from pathlib import Path

import numpy as np

from robust_amc.core.binio import Reader, pack_blob, preamble, seal
from robust_amc.errors import DatasetFormatError

from .dataset import LabeledDataset

_LOG = logging.getLogger(__name__)

MAGIC = b"AMCD"
VERSION = 1
_GEOMETRY = struct.Struct("<IIQ")


def _record_dtype(length: int) -> np.dtype:
    return np.dtype([("iq", "<f4", (2, length)), ("label", "<u4"), ("snr", "<i4")])


def dataset_to_bytes(ds: LabeledDataset) -> bytes:
    rec = np.zeros(len(ds), dtype=_record_dtype(ds.length))
    rec["iq"] = ds.frames
    rec["label"] = ds.labels
    rec["snr"] = ds.snr_db
    names = b"".join(pack_blob(n.encode("utf-8")) for n in ds.class_names)
    return seal(
        preamble(MAGIC, VERSION)
        + _GEOMETRY.pack(ds.length, ds.n_classes, len(ds))
        + names
        + rec.tobytes()
    )


def dataset_from_bytes(buf: bytes) -> LabeledDataset:
    r = Reader(buf, MAGIC, VERSION)
    length, n_classes, n = r.unpack(_GEOMETRY)
    names: list[str] = []
    for _ in range(n_classes):
        raw = r.blob("class-name table")
        try:
            names.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise DatasetFormatError("checksum", "class name is not valid UTF-8") from exc

    dtype = _record_dtype(length)
    payload = r.take(n * dtype.itemsize, f"{n} frames")
    r.finish()

    rec = np.frombuffer(payload, dtype=dtype, count=n) if n else np.zeros(0, dtype=dtype)
    try:
        return LabeledDataset(
            rec["iq"].astype(np.float64).reshape(n, 2, length),
            rec["label"].astype(np.int64),
            rec["snr"].astype(np.int64),
            tuple(names),
        )
    except ValueError as exc:
        raise DatasetFormatError("checksum", f"inconsistent payload: {exc}") from exc


def write_dataset(ds: LabeledDataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dataset_to_bytes(ds))
    _LOG.debug("wrote %d frames to %s", len(ds), path)
    return path


def read_dataset(path: str | Path) -> LabeledDataset:
    return dataset_from_bytes(Path(path).read_bytes())
