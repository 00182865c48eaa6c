"""The detection pipeline: select, whiten, score, calibrate, classify.

Two conditioning modes:

* ``local``  - per query, the whitening model is rebuilt from the query's
  top-k cosine neighbors in the representative set.
* ``global`` - one whitening model is fitted once on the whole set and
  reused for every query.

The decision criterion is the negated conditional log-likelihood, so
higher means more likely generated; the calibrated threshold is
mean + population std of the criterion over a set of real inputs.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
from concurrent.futures import ThreadPoolExecutor
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
from .likelihood import conditional_log_likelihood
from .linalg import WhiteningModel, build_whitening, estimate_covariance
from .selector import top_k

logger = logging.getLogger("clide")

DEFAULT_K = 500
DEFAULT_M = 400
DERIVED_K_MARGIN = 100

SCORES_HEADER = ["id", "log_likelihood", "criterion", "m_used", "k_used", "truncated"]
DIRECTION = "higher_is_generated"


class Label(enum.Enum):
    REAL = "real"
    GENERATED = "generated"


@dataclass(frozen=True)
class DetectorConfig:
    """Pipeline parameters: neighbors k, retained dimensions m, mode."""

    k: int = DEFAULT_K
    m: int = DEFAULT_M
    mode: str = "local"
    strict: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("local", "global"):
            raise ValidationError(f"mode must be 'local' or 'global', got {self.mode!r}")
        if self.k < 2:
            raise ValidationError(f"k must be >= 2, got {self.k}")
        if self.m < 1:
            raise ValidationError(f"m must be >= 1, got {self.m}")
        if self.m > self.k - 1:
            raise ValidationError(
                f"m={self.m} exceeds k-1={self.k - 1}; covariance of k samples has rank <= k-1"
            )

    @classmethod
    def with_derived_k(cls, m: int, **kwargs) -> "DetectorConfig":
        """Config with k derived from m by the fixed margin k = m + 100."""
        return cls(k=m + DERIVED_K_MARGIN, m=m, **kwargs)


@dataclass(frozen=True)
class ScoreRecord:
    """Per-query outcome; ``criterion`` is the negated log-likelihood."""

    id: str
    log_likelihood: float
    criterion: float
    m_used: int
    k_used: int
    neighbor_truncated: bool


@dataclass(frozen=True)
class CalibrationResult:
    """Threshold derived from real-input criteria: mean + population std."""

    threshold: float
    mean: float
    std: float
    n: int
    direction: str = DIRECTION


def _effective_k(rep: EmbeddingMatrix, cfg: DetectorConfig) -> int:
    if cfg.k > rep.n:
        if cfg.strict:
            raise ValidationError(
                f"k={cfg.k} exceeds representative set size n={rep.n} (strict mode)"
            )
        logger.warning("k=%d exceeds n=%d; clamping", cfg.k, rep.n)
        return rep.n
    return cfg.k


def _effective_m_request(rep: EmbeddingMatrix, cfg: DetectorConfig) -> int:
    m_req = min(cfg.m, rep.d)
    if rep.n < m_req + 1:
        raise DegenerateInputError(
            f"representative set has n={rep.n} rows; need at least m+1={m_req + 1}"
        )
    return m_req


def build_global_model(rep: EmbeddingMatrix, cfg: DetectorConfig) -> WhiteningModel:
    """Whitening model over the full representative set (global mode)."""
    m_req = _effective_m_request(rep, cfg)
    return build_whitening(estimate_covariance(rep), m_req)


def _score_against_model(
    model: WhiteningModel, query: EmbeddingVector, query_id: str, k_used: int, truncated: bool
) -> ScoreRecord:
    score = conditional_log_likelihood(model, query)
    return ScoreRecord(
        id=query_id,
        log_likelihood=score.log_likelihood,
        criterion=-score.log_likelihood,
        m_used=score.m,
        k_used=k_used,
        neighbor_truncated=truncated,
    )


def _score_local(
    rep: EmbeddingMatrix, query: EmbeddingVector, k_eff: int, m_req: int, query_id: str, k_cfg: int
) -> ScoreRecord:
    neighbors = top_k(rep, query, k_eff)
    # Row-order (not similarity-order) subset: the covariance sum is then
    # independent of the similarity ranking, and local k == n reproduces the
    # global model exactly.
    indices = np.sort(neighbors.indices)
    subset = rep.data64[indices]
    try:
        model = build_whitening(estimate_covariance(subset), min(m_req, subset.shape[0] - 1))
    except DegenerateInputError as exc:
        sims = neighbors.similarities
        raise NumericalError(
            f"degenerate neighbor covariance for query {query_id!r}: {exc} "
            f"(k={k_eff}, neighbor rows {indices[0]}..{indices[-1]}, "
            f"similarity range [{sims.min():.6g}, {sims.max():.6g}])"
        ) from exc
    return _score_against_model(model, query, query_id, k_eff, k_eff < k_cfg)


def score(
    rep: EmbeddingMatrix, query: EmbeddingVector, cfg: DetectorConfig, query_id: str = "0"
) -> ScoreRecord:
    """Score one query against the representative set."""
    if query.d != rep.d:
        raise ValidationError(f"query has d={query.d}, set has d={rep.d}")
    m_req = _effective_m_request(rep, cfg)
    if cfg.mode == "global":
        model = build_global_model(rep, cfg)
        return _score_against_model(model, query, query_id, rep.n, False)
    k_eff = _effective_k(rep, cfg)
    return _score_local(rep, query, k_eff, m_req, query_id, cfg.k)


def score_with_model(
    model: WhiteningModel, query: EmbeddingVector, query_id: str = "0"
) -> ScoreRecord:
    """Score against a prebuilt (e.g. deserialized) whitening model.

    The conditioning set size is unknown here, so ``k_used`` is recorded
    as 0.
    """
    return _score_against_model(model, query, query_id, 0, False)


def score_batch(
    rep: EmbeddingMatrix,
    queries: EmbeddingMatrix,
    cfg: DetectorConfig,
    threads: int = 1,
    skip_errors: bool = False,
) -> list[ScoreRecord]:
    """Score every row of ``queries`` in input order.

    Each element equals the corresponding single :func:`score` call; queries
    are independent, so worker count never changes values or order. With
    ``skip_errors`` a failing row is logged and dropped instead of aborting
    the batch.
    """
    if queries.d != rep.d:
        raise ValidationError(f"queries have d={queries.d}, set has d={rep.d}")
    m_req = _effective_m_request(rep, cfg)
    k_eff = _effective_k(rep, cfg) if cfg.mode == "local" else rep.n
    model = build_global_model(rep, cfg) if cfg.mode == "global" else None

    def one(i: int) -> ScoreRecord:
        qid = queries.row_id(i)
        try:
            q = queries.row(i)
            if model is not None:
                return _score_against_model(model, q, qid, rep.n, False)
            return _score_local(rep, q, k_eff, m_req, qid, cfg.k)
        except Exception as exc:
            raise type(exc)(f"query {qid!r} (row {i}): {exc}") from exc

    results: list[ScoreRecord | None]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(one, i) for i in range(queries.n)]
            results = []
            for i, fut in enumerate(futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    if not skip_errors:
                        raise
                    logger.warning("skipping row %d: %s", i, exc)
                    results.append(None)
    else:
        results = []
        for i in range(queries.n):
            try:
                results.append(one(i))
            except Exception as exc:
                if not skip_errors:
                    raise
                logger.warning("skipping row %d: %s", i, exc)
                results.append(None)
    return [r for r in results if r is not None]


def calibrate(real_scores: list[ScoreRecord]) -> CalibrationResult:
    """Threshold = mean + population std of the real-input criteria."""
    if len(real_scores) < 2:
        raise DegenerateInputError(f"calibration needs >= 2 records, got {len(real_scores)}")
    m_values = {r.m_used for r in real_scores}
    if len(m_values) != 1:
        raise ValidationError(
            f"mixed m_used in calibration run: {sorted(m_values)}; scores are not comparable"
        )
    criteria = np.array([r.criterion for r in real_scores], dtype=np.float64)
    mean = float(criteria.mean())
    std = float(criteria.std())
    return CalibrationResult(threshold=mean + std, mean=mean, std=std, n=criteria.size)


def classify(record: ScoreRecord, cal: CalibrationResult) -> Label:
    """Generated iff the criterion strictly exceeds the threshold."""
    return Label.GENERATED if record.criterion > cal.threshold else Label.REAL


def write_scores_csv(records: list[ScoreRecord], path) -> None:
    """Scores file: one row per query, floats at 17 significant digits."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SCORES_HEADER)
            for r in records:
                writer.writerow(
                    [
                        r.id,
                        f"{r.log_likelihood:.17g}",
                        f"{r.criterion:.17g}",
                        r.m_used,
                        r.k_used,
                        "true" if r.neighbor_truncated else "false",
                    ]
                )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_scores_csv(path) -> list[ScoreRecord]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError(f"{path}: empty scores file") from None
            if header != SCORES_HEADER:
                raise FormatError(f"{path}: unexpected header {header}")
            records = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(SCORES_HEADER):
                    raise FormatError(f"{path}:{lineno}: expected {len(SCORES_HEADER)} fields")
                try:
                    records.append(
                        ScoreRecord(
                            id=row[0],
                            log_likelihood=float(row[1]),
                            criterion=float(row[2]),
                            m_used=int(row[3]),
                            k_used=int(row[4]),
                            neighbor_truncated={"true": True, "false": False}[row[5]],
                        )
                    )
                except (ValueError, KeyError) as exc:
                    raise FormatError(f"{path}:{lineno}: bad field: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return records


def write_calibration_json(
    cal: CalibrationResult, path, m: int, k: int, mode: str
) -> None:
    """Calibration file with the run parameters it was derived under."""
    payload = {
        "threshold": cal.threshold,
        "mean": cal.mean,
        "std": cal.std,
        "n": cal.n,
        "direction": cal.direction,
        "m": m,
        "k": k,
        "mode": mode,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_calibration_json(path) -> tuple[CalibrationResult, dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    try:
        cal = CalibrationResult(
            threshold=float(payload["threshold"]),
            mean=float(payload["mean"]),
            std=float(payload["std"]),
            n=int(payload["n"]),
            direction=str(payload["direction"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: missing or bad calibration field: {exc}") from exc
    if cal.direction != DIRECTION:
        raise ValidationError(f"{path}: unsupported direction {cal.direction!r}")
    return cal, payload
