"""Exact top-k cosine-similarity selection over a representative set.

No approximate index: representative sets stay small enough (tens of
thousands of rows) that a full scan per query is both fast and free of
recall error. Ties are broken toward the lower row index so selection is
a total, deterministic order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding_store import EmbeddingMatrix, EmbeddingVector
from .errors import DegenerateInputError, ValidationError


@dataclass(frozen=True)
class NeighborSet:
    """Indices into the representative set, most similar first."""

    indices: np.ndarray
    similarities: np.ndarray
    truncated: bool

    @property
    def k_effective(self) -> int:
        return self.indices.size


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between two embeddings, clamped to [-1, 1]."""
    if a.d != b.d:
        raise ValidationError(f"dimension mismatch: {a.d} vs {b.d}")
    na = float(np.linalg.norm(a.values))
    nb = float(np.linalg.norm(b.values))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine similarity undefined for zero-norm vector")
    sim = float(a.values @ b.values) / (na * nb)
    return min(1.0, max(-1.0, sim))


def top_k(rep: EmbeddingMatrix, query: EmbeddingVector, k: int) -> NeighborSet:
    """The k representative rows most cosine-similar to ``query``.

    When k exceeds the set size, all rows are returned and the result is
    marked truncated.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if query.d != rep.d:
        raise ValidationError(f"query has d={query.d}, set has d={rep.d}")

    norms = rep.row_norms
    if (norms == 0.0).any():
        row = int(np.argmax(norms == 0.0))
        raise DegenerateInputError(f"zero-norm representative row {row}")
    qnorm = float(np.linalg.norm(query.values))
    if qnorm == 0.0:
        raise DegenerateInputError("zero-norm query vector")

    sims = rep.data64 @ query.values
    sims /= norms * qnorm
    np.clip(sims, -1.0, 1.0, out=sims)

    # Stable sort on the negated similarities: descending, ties by row index.
    order = np.argsort(-sims, kind="stable")
    k_eff = min(k, rep.n)
    top = order[:k_eff]
    return NeighborSet(
        indices=np.ascontiguousarray(top),
        similarities=np.ascontiguousarray(sims[top]),
        truncated=k_eff < k,
    )
