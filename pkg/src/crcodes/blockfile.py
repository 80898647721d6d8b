"""
CRC1 per-device block files.

Layout, little-endian::

    magic "CRC1" | version u16 | field width u8 | l u32 | alpha_units u32 | unit_bytes u64
    then alpha_units records of (l field elements, unit_bytes payload bytes)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from . import gf as gfmod
from .codec import DeviceState
from .errors import BlockFormatError

MAGIC = b"CRC1"
VERSION = 1
_HEADER = struct.Struct("<4sHBIIQ")


def _dtype(w):
    return np.dtype("<u1") if w == 8 else np.dtype("<u2")


def dumps(dev: DeviceState) -> bytes:
    head = _HEADER.pack(MAGIC, VERSION, dev.w, dev.l, dev.alpha_units, dev.unit_bytes)
    dt = _dtype(dev.w)
    parts = [head]
    for c, p in zip(dev.coeffs, dev.payload):
        parts.append(c.astype(dt).tobytes())
        parts.append(p.astype(dt).tobytes())
    return b"".join(parts)


def loads(raw: bytes, device_id: int = 0) -> DeviceState:
    if len(raw) < _HEADER.size:
        raise BlockFormatError("file too short for a CRC1 header")
    magic, version, w, l, alpha, unit_bytes = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BlockFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise BlockFormatError(f"unsupported version {version}")
    if w not in gfmod.PRIMITIVE_POLY:
        raise BlockFormatError(f"unsupported field width {w}")
    sb = w // 8
    if unit_bytes % sb:
        raise BlockFormatError(f"unit size {unit_bytes} is not a whole number of symbols")
    record = l * sb + unit_bytes
    if len(raw) != _HEADER.size + alpha * record:
        raise BlockFormatError(f"expected {_HEADER.size + alpha * record} bytes, got {len(raw)}")
    dt = _dtype(w)
    body = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size).reshape(alpha, record)
    coeffs = body[:, : l * sb].copy().view(dt).astype(gfmod.field(w).dtype).reshape(alpha, l)
    payload = body[:, l * sb :].copy().view(dt).astype(gfmod.field(w).dtype).reshape(alpha, -1)
    return DeviceState(device_id, coeffs, payload, True, w)


def write(path, dev: DeviceState) -> None:
    Path(path).write_bytes(dumps(dev))


def read(path, device_id: int = 0) -> DeviceState:
    return loads(Path(path).read_bytes(), device_id)
