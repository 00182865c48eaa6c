"""Embedding matrices: in-memory representation and on-disk formats.

Two interchange formats are supported:

* EMBF, a little-endian binary format::

    magic "EMBF" | version u8 = 1 | dtype u8 = 1 (float32) | reserved u16 = 0
    | d u32 | n u64 | payload n*d float32 row-major
    | has_ids u8 (0/1) | if 1: n records of (len u16, UTF-8 bytes)

* CSV, comma-separated numeric rows with an optional leading column of
  string ids (detected by a non-numeric first token).

Values are stored as float32 (the precision embeddings are produced at);
numerical consumers upcast to float64 via :attr:`EmbeddingMatrix.data64`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import FormatError, IoError, ValidationError

_HEADER = struct.Struct("<4sBBHIQ")
_MAGIC = b"EMBF"
_VERSION = 1
_DTYPE_F32 = 1


def _check_finite(data: np.ndarray) -> None:
    finite_rows = np.isfinite(data).all(axis=1)
    if not finite_rows.all():
        row = int(np.argmin(finite_rows))
        raise ValidationError(f"non-finite value in row {row}")


@dataclass(eq=False)
class EmbeddingMatrix:
    """n embedding vectors of dimension d, immutable after construction.

    ``ids`` is optional; when absent, rows are identified by their
    zero-based index in all outputs.
    """

    data: np.ndarray
    ids: list[str] | None = None

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError(f"expected a 2-D array, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"matrix must be at least 1x1, got {arr.shape}")
        _check_finite(arr)
        arr.setflags(write=False)
        self.data = arr
        if self.ids is not None:
            self.ids = [str(i) for i in self.ids]
            if len(self.ids) != arr.shape[0]:
                raise ValidationError(
                    f"{len(self.ids)} ids for {arr.shape[0]} rows"
                )
            if len(set(self.ids)) != len(self.ids):
                raise ValidationError("duplicate ids")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @cached_property
    def data64(self) -> np.ndarray:
        """Float64 view of the payload, computed once, for numerical work."""
        arr = self.data.astype(np.float64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def row_norms(self) -> np.ndarray:
        """Euclidean norm of every row in float64, computed once."""
        norms = np.linalg.norm(self.data64, axis=1)
        norms.setflags(write=False)
        return norms

    def row_id(self, i: int) -> str:
        return self.ids[i] if self.ids is not None else str(i)

    def row(self, i: int) -> "EmbeddingVector":
        return EmbeddingVector(self.data64[i])

    def equals(self, other: "EmbeddingMatrix") -> bool:
        if self.ids != other.ids:
            return False
        return self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )


@dataclass(eq=False)
class EmbeddingVector:
    """A single embedding, held in float64 for computation."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValidationError("embedding vector must be 1-D and non-empty")
        if not np.isfinite(arr).all():
            raise ValidationError("non-finite value in embedding vector")
        self.values = arr

    @property
    def d(self) -> int:
        return self.values.shape[0]


def write_embf(m: EmbeddingMatrix, path) -> None:
    """Write ``m`` to ``path`` in EMBF format. Deterministic bytes."""
    parts = [_HEADER.pack(_MAGIC, _VERSION, _DTYPE_F32, 0, m.d, m.n)]
    parts.append(np.ascontiguousarray(m.data, dtype="<f4").tobytes())
    if m.ids is None:
        parts.append(b"\x00")
    else:
        parts.append(b"\x01")
        for s in m.ids:
            raw = s.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValidationError(f"id too long ({len(raw)} bytes)")
            parts.append(struct.pack("<H", len(raw)))
            parts.append(raw)
    try:
        with open(path, "wb") as fh:
            fh.write(b"".join(parts))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_embf(path) -> EmbeddingMatrix:
    """Read an EMBF file, validating structure and payload."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, dtype, reserved, d, n = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != _DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    if reserved != 0:
        raise FormatError(f"{path}: reserved field is {reserved}, expected 0")
    if d < 1 or n < 1:
        raise FormatError(f"{path}: invalid shape n={n}, d={d}")

    off = _HEADER.size
    payload_bytes = n * d * 4
    if len(blob) < off + payload_bytes + 1:
        raise FormatError(f"{path}: truncated payload (declared n={n}, d={d})")
    data = np.frombuffer(blob, dtype="<f4", count=n * d, offset=off).reshape(n, d)
    off += payload_bytes

    has_ids = blob[off]
    off += 1
    if has_ids not in (0, 1):
        raise FormatError(f"{path}: bad has_ids byte {has_ids}")
    ids = None
    if has_ids:
        ids = []
        for i in range(n):
            if len(blob) < off + 2:
                raise FormatError(f"{path}: truncated id record {i}")
            (length,) = struct.unpack_from("<H", blob, off)
            off += 2
            if len(blob) < off + length:
                raise FormatError(f"{path}: truncated id record {i}")
            try:
                ids.append(blob[off : off + length].decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise FormatError(f"{path}: id record {i} is not UTF-8") from exc
            off += length
    if off != len(blob):
        raise FormatError(f"{path}: {len(blob) - off} trailing bytes")

    return EmbeddingMatrix(data=data, ids=ids)


def read_csv(path) -> EmbeddingMatrix:
    """Read a CSV of numeric rows, with an optional leading id column."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\r\n") for ln in fh]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    rows = [ln for ln in lines if ln.strip() != ""]
    if not rows:
        raise FormatError(f"{path}: no data rows")

    first = rows[0].split(",")[0].strip()
    try:
        float(first)
        has_ids = False
    except ValueError:
        has_ids = True

    ids: list[str] | None = [] if has_ids else None
    values = []
    width = None
    for lineno, ln in enumerate(rows, start=1):
        tokens = [t.strip() for t in ln.split(",")]
        if has_ids:
            if len(tokens) < 2:
                raise FormatError(f"{path}:{lineno}: id row with no values")
            ids.append(tokens[0])  # type: ignore[union-attr]
            tokens = tokens[1:]
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise FormatError(
                f"{path}:{lineno}: ragged row ({len(tokens)} values, expected {width})"
            )
        try:
            values.append([float(t) for t in tokens])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: unparseable token") from exc

    return EmbeddingMatrix(data=np.array(values, dtype=np.float64), ids=ids)


def write_csv(m: EmbeddingMatrix, path) -> None:
    """Write ``m`` as CSV; float32 values render with 9 significant digits."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(m.n):
                vals = ",".join(f"{float(v):.9g}" for v in m.data[i])
                if m.ids is not None:
                    fh.write(f"{m.ids[i]},{vals}\n")
                else:
                    fh.write(vals + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_any(path) -> EmbeddingMatrix:
    """Read either format, sniffing EMBF by its magic bytes."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if head == _MAGIC:
        return read_embf(path)
    return read_csv(path)
