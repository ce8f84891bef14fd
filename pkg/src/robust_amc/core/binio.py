"""Little-endian framing helpers shared by the AMCD / AMCM / AMCP formats."""

from __future__ import annotations

import json
import struct
import zlib

from typing import Any

from robust_amc.errors import DatasetFormatError

U32 = struct.Struct("<I")
U64 = struct.Struct("<Q")
_PREAMBLE = struct.Struct("<4sI")


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def seal(body: bytes) -> bytes:
    """Append the CRC32 of *body*."""
    return body + U32.pack(crc32(body))


def preamble(magic: bytes, version: int) -> bytes:
    return _PREAMBLE.pack(magic, version)


def pack_blob(raw: bytes) -> bytes:
    return U32.pack(len(raw)) + raw


def pack_json(obj: Any) -> bytes:
    return pack_blob(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8"))


class Reader:
    """Bounds-checked cursor; any overrun raises ``truncated``."""

    def __init__(self, buf: bytes, magic: bytes, version: int) -> None:
        self.buf = buf
        self.offset = 0
        if len(buf) >= 4 and buf[:4] != magic:
            raise DatasetFormatError("bad_magic", f"expected {magic!r}, found {buf[:4]!r}")
        (found_magic, found_version) = self.unpack(_PREAMBLE)
        if found_magic != magic:
            raise DatasetFormatError("bad_magic", f"expected {magic!r}, found {found_magic!r}")
        if found_version != version:
            raise DatasetFormatError(
                "version", f"unsupported version {found_version} (expected {version})"
            )

    def need(self, n: int, what: str = "payload") -> None:
        if self.offset + n > len(self.buf):
            raise DatasetFormatError(
                "truncated",
                f"{what} needs {n} bytes at offset {self.offset}, file has {len(self.buf)}",
            )

    def unpack(self, fmt: struct.Struct, what: str = "header") -> tuple[Any, ...]:
        self.need(fmt.size, what)
        out = fmt.unpack_from(self.buf, self.offset)
        self.offset += fmt.size
        return out

    def take(self, n: int, what: str = "payload") -> bytes:
        self.need(n, what)
        raw = self.buf[self.offset : self.offset + n]
        self.offset += n
        return raw

    def blob(self, what: str = "blob") -> bytes:
        (n,) = self.unpack(U32, what)
        return self.take(n, what)

    def json(self, what: str = "descriptor") -> Any:
        raw = self.blob(what)
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DatasetFormatError("checksum", f"{what} is not valid JSON") from exc

    def finish(self) -> None:
        """Check the trailing CRC32 and that nothing follows it."""
        end = self.offset
        self.need(4, "checksum")
        (stored,) = U32.unpack_from(self.buf, end)
        if crc32(self.buf[:end]) != stored:
            raise DatasetFormatError("checksum", "CRC32 mismatch")
        if len(self.buf) != end + 4:
            raise DatasetFormatError("checksum", f"{len(self.buf) - end - 4} trailing bytes after checksum")
        self.offset = end + 4
