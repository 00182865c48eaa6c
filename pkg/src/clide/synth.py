"""Seeded generators of low-rank Gaussian domains and off-manifold queries.

A domain concentrates its variance in a random m_active-dimensional
subspace (the spectrum) and keeps only ``residual_sigma`` variance in the
remaining directions. Off-manifold queries take in-domain samples and push
them away along directions orthogonal to the dominant subspace, standing in
for generated content that leaves the real-data manifold.

All outputs are pure functions of the spec and the requested count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding_store import EmbeddingMatrix
from .errors import DegenerateInputError, ValidationError


@dataclass(eq=False)
class DomainSpec:
    """Parameters of one synthetic domain.

    ``spectrum`` defaults to a linear decay from 4.0 to 0.5 over the
    dominant dimensions; ``center`` defaults to the origin.
    """

    d: int
    m_active: int
    seed: int
    spectrum: np.ndarray | None = None
    residual_sigma: float = 0.01
    center: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.m_active <= self.d:
            raise ValidationError(f"require 1 <= m_active={self.m_active} <= d={self.d}")
        if self.spectrum is None:
            if self.m_active == 1:
                self.spectrum = np.array([4.0])
            else:
                self.spectrum = np.linspace(4.0, 0.5, self.m_active)
        self.spectrum = np.asarray(self.spectrum, dtype=np.float64)
        if self.spectrum.shape != (self.m_active,):
            raise ValidationError(
                f"spectrum length {self.spectrum.size} != m_active {self.m_active}"
            )
        if (self.spectrum <= 0).any() or (np.diff(self.spectrum) > 0).any():
            raise ValidationError("spectrum must be positive and descending")
        if not 0.0 < self.residual_sigma < float(self.spectrum.min()):
            raise ValidationError(
                "residual_sigma must be positive and below the smallest spectrum value"
            )
        if self.center is None:
            self.center = np.zeros(self.d)
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.center.shape != (self.d,) or not np.isfinite(self.center).all():
            raise ValidationError("center must be a finite length-d vector")


def _orthonormal_basis(rng: np.random.Generator, d: int) -> np.ndarray:
    """Seeded random orthonormal d x d basis.

    QR of a standard Gaussian matrix with column signs fixed so the
    triangular factor has a positive diagonal; this pins the basis down to
    a unique, reproducible choice.
    """
    gauss = rng.standard_normal((d, d))
    q, r = np.linalg.qr(gauss)
    signs = np.where(np.diag(r) >= 0.0, 1.0, -1.0)
    return q * signs


def _draw(spec: DomainSpec, n: int) -> tuple[np.ndarray, np.ndarray, np.random.Generator]:
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(spec.seed)
    basis = _orthonormal_basis(rng, spec.d)
    v = basis[:, : spec.m_active]
    u = basis[:, spec.m_active :]

    z1 = rng.standard_normal((n, spec.m_active))
    rows = spec.center + (z1 * np.sqrt(spec.spectrum)) @ v.T
    if spec.m_active < spec.d:
        z2 = rng.standard_normal((n, spec.d - spec.m_active))
        rows += np.sqrt(spec.residual_sigma) * (z2 @ u.T)
    return rows, u, rng


def generate_domain(spec: DomainSpec, n: int) -> EmbeddingMatrix:
    """Sample n in-domain vectors; deterministic per (spec, n)."""
    rows, _, _ = _draw(spec, n)
    return EmbeddingMatrix(data=rows)


def generate_offset_queries(spec: DomainSpec, n: int, offset_sigmas: float) -> EmbeddingMatrix:
    """In-domain samples pushed off the dominant subspace.

    Each sample is displaced along its own seeded random direction
    orthogonal to the dominant subspace, by ``offset_sigmas`` times the rms
    off-subspace radius ``sqrt(residual_sigma * (d - m_active))``. At
    ``offset_sigmas == 0`` the output equals :func:`generate_domain` exactly.
    """
    if offset_sigmas < 0:
        raise ValidationError(f"offset_sigmas must be >= 0, got {offset_sigmas}")
    rows, u, rng = _draw(spec, n)
    if offset_sigmas > 0:
        l = spec.d - spec.m_active
        if l == 0:
            raise DegenerateInputError(
                "domain has no off-subspace directions (m_active == d)"
            )
        g = rng.standard_normal((n, l))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radius = offset_sigmas * np.sqrt(spec.residual_sigma * l)
        rows = rows + radius * (g @ u.T)
    return EmbeddingMatrix(data=rows)
