"""Centering, covariance, deterministic eigendecomposition, whitening.

The whitening transform maps data with covariance S to zero-mean,
identity-covariance coordinates: rows of ``w`` are ``lam_j**-0.5 * v_j`` for
the top-m eigenpairs of S, so ``w @ S @ w.T == I_m`` up to round-off.
Everything here computes in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .embedding_store import EmbeddingMatrix, EmbeddingVector
from .errors import (
    DegenerateInputError,
    FormatError,
    IoError,
    NumericalError,
    ValidationError,
)

# Eigenvalues below max(RELATIVE_FLOOR * lam_max, ABSOLUTE_FLOOR) carry no
# usable variance and are dropped from the retained set; keeping them would
# make lam**-0.5 blow up.
RELATIVE_FLOOR = 1e-10
ABSOLUTE_FLOOR = 1e-300

_SYMMETRY_RTOL = 1e-12
_SIGN_EPS = 1e-12

_WHTM_HEADER = struct.Struct("<4sBIII")
_WHTM_MAGIC = b"WHTM"
_WHTM_VERSION = 1


@dataclass(eq=False)
class CovarianceModel:
    """Mean vector and population covariance of a sample."""

    mu: np.ndarray
    sigma: np.ndarray
    n_samples: int

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.mu.ndim != 1 or self.sigma.shape != (self.mu.size, self.mu.size):
            raise ValidationError("covariance shape inconsistent with mean")

    @property
    def d(self) -> int:
        return self.mu.size


@dataclass(eq=False)
class WhiteningModel:
    """Truncated whitening transform: y = w @ (x - mu), y of length m."""

    mu: np.ndarray
    w: np.ndarray
    eigenvalues: np.ndarray
    m: int
    m_requested: int
    d: int

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.w = np.asarray(self.w, dtype=np.float64)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        if self.mu.shape != (self.d,) or self.w.shape != (self.m, self.d):
            raise ValidationError("whitening model shapes inconsistent")
        if self.eigenvalues.shape != (self.m,):
            raise ValidationError("eigenvalue count must equal m")
        if not (1 <= self.m <= self.m_requested <= self.d):
            raise ValidationError(
                f"require 1 <= m={self.m} <= m_requested={self.m_requested} <= d={self.d}"
            )
        if not np.isfinite(self.w).all() or not np.isfinite(self.mu).all():
            raise ValidationError("non-finite whitening parameters")
        if (self.eigenvalues <= 0).any() or (np.diff(self.eigenvalues) > 0).any():
            raise ValidationError("eigenvalues must be positive and descending")

    @property
    def truncated(self) -> bool:
        """True when fewer than the requested dimensions survived the floor."""
        return self.m < self.m_requested


def estimate_covariance(x) -> CovarianceModel:
    """Population-normalized (1/N) covariance of the rows of ``x``.

    ``x`` may be an :class:`EmbeddingMatrix` or an (n, d) float array.
    """
    rows = x.data64 if isinstance(x, EmbeddingMatrix) else np.asarray(x, np.float64)
    n = rows.shape[0]
    if n < 2:
        raise DegenerateInputError(f"covariance needs at least 2 rows, got {n}")
    mu = rows.mean(axis=0)
    centered = rows - mu
    sigma = centered.T @ centered
    sigma /= n
    sigma = (sigma + sigma.T) * 0.5
    return CovarianceModel(mu=mu, sigma=sigma, n_samples=n)


def eigh_descending(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, fully deterministic.

    Returns eigenvalues in descending order and eigenvectors as orthonormal
    columns, with each eigenvector's first component of magnitude above
    1e-12 made positive. Ties keep the order the solver produced (stable
    re-sort), so identical inputs give bit-identical output.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValidationError(f"expected a square matrix, got {sigma.shape}")
    if not np.isfinite(sigma).all():
        raise ValidationError("non-finite entries in matrix")
    scale = np.abs(sigma).max()
    if np.abs(sigma - sigma.T).max() > _SYMMETRY_RTOL * scale:
        raise ValidationError("matrix is not symmetric within 1e-12 relative")

    sym = (sigma + sigma.T) * 0.5
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc

    order = np.argsort(-vals, kind="stable")
    vals = np.ascontiguousarray(vals[order])
    vecs = np.ascontiguousarray(vecs[:, order])

    # Sign convention: first component with |v_i| > 1e-12 is positive.
    significant = np.abs(vecs) > _SIGN_EPS
    first = significant.argmax(axis=0)
    lead = vecs[first, np.arange(vecs.shape[1])]
    vecs[:, lead < 0] *= -1.0
    return vals, vecs


def build_whitening(cov: CovarianceModel, m_requested: int) -> WhiteningModel:
    """Whitening from the top-m eigenpairs of ``cov.sigma``.

    Eigenvalues below the floor are discarded; when that leaves fewer than
    ``m_requested`` directions the model is marked truncated.
    """
    d = cov.d
    if not 1 <= m_requested <= d:
        raise ValidationError(f"m_requested={m_requested} outside [1, {d}]")
    vals, vecs = eigh_descending(cov.sigma)

    floor = max(RELATIVE_FLOOR * vals[0], ABSOLUTE_FLOOR)
    usable = int(np.searchsorted(-vals, -floor, side="right"))
    if usable == 0:
        raise DegenerateInputError("representative subset has no usable variance")

    m = min(m_requested, usable)
    eigenvalues = np.ascontiguousarray(vals[:m])
    w = vecs[:, :m].T / np.sqrt(eigenvalues)[:, None]
    return WhiteningModel(
        mu=cov.mu,
        w=np.ascontiguousarray(w),
        eigenvalues=eigenvalues,
        m=m,
        m_requested=m_requested,
        d=d,
    )


def whiten(model: WhiteningModel, x: EmbeddingVector) -> np.ndarray:
    """Apply the transform to a single vector: w @ (x - mu)."""
    if x.d != model.d:
        raise ValidationError(f"vector has d={x.d}, model expects d={model.d}")
    return model.w @ (x.values - model.mu)


def whiten_rows(model: WhiteningModel, rows) -> np.ndarray:
    """Whiten many vectors at once; rows of the result are whitened rows.

    Bulk path for analysis (isotropy checks, normality validation); uses a
    single matrix product rather than per-row products.
    """
    arr = rows.data64 if isinstance(rows, EmbeddingMatrix) else np.asarray(rows, np.float64)
    if arr.ndim != 2 or arr.shape[1] != model.d:
        raise ValidationError(f"rows have shape {arr.shape}, model expects d={model.d}")
    return (arr - model.mu) @ model.w.T


def write_whtm(model: WhiteningModel, path) -> None:
    """Serialize a whitening model; deterministic bytes for equal models."""
    parts = [
        _WHTM_HEADER.pack(_WHTM_MAGIC, _WHTM_VERSION, model.d, model.m, model.m_requested),
        np.ascontiguousarray(model.mu, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.eigenvalues, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.w, dtype="<f8").tobytes(),
    ]
    try:
        with open(path, "wb") as fh:
            fh.write(b"".join(parts))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_whtm(path) -> WhiteningModel:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if len(blob) < _WHTM_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, d, m, m_requested = _WHTM_HEADER.unpack_from(blob)
    if magic != _WHTM_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != _WHTM_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = _WHTM_HEADER.size + 8 * (d + m + m * d)
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(blob)}")

    off = _WHTM_HEADER.size
    mu = np.frombuffer(blob, dtype="<f8", count=d, offset=off).copy()
    off += 8 * d
    eigenvalues = np.frombuffer(blob, dtype="<f8", count=m, offset=off).copy()
    off += 8 * m
    w = np.frombuffer(blob, dtype="<f8", count=m * d, offset=off).reshape(m, d).copy()
    return WhiteningModel(
        mu=mu, w=w, eigenvalues=eigenvalues, m=m, m_requested=m_requested, d=d
    )
