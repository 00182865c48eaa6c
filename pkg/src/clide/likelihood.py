"""Gaussian log-likelihood of whitened vectors, in nats.

A whitened vector is modeled as standard normal, so the log-density is
``-0.5 * (m * ln(2*pi) + |y|^2)``. The conditional variant scores a raw
embedding against a whitening model fitted on a representative subset,
using only the model's m retained dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embedding_store import EmbeddingVector
from .errors import ValidationError
from .linalg import WhiteningModel, whiten

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LikelihoodScore:
    """Log-likelihood in nats together with the pieces it was built from.

    Scores are only comparable at equal ``m``: the ``m * ln(2*pi)`` offset
    shifts with the retained dimension.
    """

    log_likelihood: float
    m: int
    squared_norm: float


def _score_from_squared_norm(squared_norm: float, m: int) -> LikelihoodScore:
    # Single arithmetic path shared by the global and conditional entry
    # points, so the m == d reduction is exact at the bit level.
    ll = -0.5 * (m * LOG_2PI + squared_norm)
    return LikelihoodScore(log_likelihood=ll, m=m, squared_norm=squared_norm)


def global_log_likelihood(y: np.ndarray) -> LikelihoodScore:
    """Log-likelihood of an already-whitened vector under N(0, I)."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 1:
        raise ValidationError("whitened vector must be 1-D and non-empty")
    if not np.isfinite(y).all():
        raise ValidationError("non-finite value in whitened vector")
    return _score_from_squared_norm(float(y @ y), y.size)


def conditional_log_likelihood(model: WhiteningModel, x: EmbeddingVector) -> LikelihoodScore:
    """Log-likelihood of ``x`` conditioned on the model's representative data.

    Whitens ``x`` with the model's m-dimensional transform and evaluates the
    standard-normal log-density in that subspace.
    """
    y = whiten(model, x)
    return _score_from_squared_norm(float(y @ y), model.m)
