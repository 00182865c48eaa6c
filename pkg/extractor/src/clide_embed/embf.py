"""Writer for the EMBF embedding interchange format.

Little-endian layout::

    magic "EMBF" | version u8 = 1 | dtype u8 = 1 (float32) | reserved u16 = 0
    | d u32 | n u64 | payload n*d float32 row-major
    | has_ids u8 (0/1) | if 1: n records of (len u16, UTF-8 bytes)

This is the detector's on-disk contract; the extractor only ever writes it.
"""

from __future__ import annotations

import struct

import numpy as np

_HEADER = struct.Struct("<4sBBHIQ")


def write_embf(data: np.ndarray, ids: list[str], path) -> None:
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"embedding payload must be a non-empty 2-D array, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("non-finite embedding value")
    n, d = arr.shape
    if len(ids) != n:
        raise ValueError(f"{len(ids)} ids for {n} rows")
    parts = [_HEADER.pack(b"EMBF", 1, 1, 0, d, n), arr.tobytes(), b"\x01"]
    for s in ids:
        raw = s.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"id too long: {s!r}")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))
