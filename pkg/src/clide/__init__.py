"""Zero-shot generated-content detection over embedding vectors.

Scores a query embedding by the Gaussian log-likelihood of its whitened
coordinates, with the whitening fitted on (a neighborhood of) a
representative set of real-content embeddings.
"""

from .detector import (
    CalibrationResult,
    DetectorConfig,
    Label,
    ScoreRecord,
    calibrate,
    classify,
    score,
    score_batch,
)
from .embedding_store import (
    EmbeddingMatrix,
    EmbeddingVector,
    read_any,
    read_csv,
    read_embf,
    write_csv,
    write_embf,
)
from .errors import (
    ClideError,
    DegenerateInputError,
    FormatError,
    IoError,
    NumericalError,
    ValidationError,
)
from .likelihood import LikelihoodScore, conditional_log_likelihood, global_log_likelihood
from .linalg import (
    CovarianceModel,
    WhiteningModel,
    build_whitening,
    eigh_descending,
    estimate_covariance,
    read_whtm,
    whiten,
    whiten_rows,
    write_whtm,
)
from .selector import NeighborSet, cosine_similarity, top_k
from .stats import (
    EvalReport,
    NormalityReport,
    anderson_darling,
    auc,
    average_precision,
    dagostino_pearson,
    evaluate,
    f1_accuracy,
    validate_whitening,
)
from .synth import DomainSpec, generate_domain, generate_offset_queries

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "ClideError",
    "CovarianceModel",
    "DegenerateInputError",
    "DetectorConfig",
    "DomainSpec",
    "EmbeddingMatrix",
    "EmbeddingVector",
    "EvalReport",
    "FormatError",
    "IoError",
    "Label",
    "LikelihoodScore",
    "NeighborSet",
    "NormalityReport",
    "NumericalError",
    "ScoreRecord",
    "ValidationError",
    "WhiteningModel",
    "anderson_darling",
    "auc",
    "average_precision",
    "build_whitening",
    "calibrate",
    "classify",
    "conditional_log_likelihood",
    "cosine_similarity",
    "dagostino_pearson",
    "eigh_descending",
    "estimate_covariance",
    "evaluate",
    "f1_accuracy",
    "generate_domain",
    "generate_offset_queries",
    "global_log_likelihood",
    "read_any",
    "read_csv",
    "read_embf",
    "read_whtm",
    "score",
    "score_batch",
    "top_k",
    "validate_whitening",
    "whiten",
    "whiten_rows",
    "write_csv",
    "write_embf",
    "write_whtm",
]
