"""Ranking metrics, classification metrics, and normality testing.

AUC is the Mann-Whitney statistic (ties count one half) computed from
rank counts; average precision uses a pessimistic tie rule (negatives
rank ahead of positives at equal score). The normality tests target the
fully specified N(0, 1) - whitened coordinates are standardized by
construction, so no parameters are estimated and the simple-hypothesis
critical values apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detector import CalibrationResult, Label, ScoreRecord, classify
from .embedding_store import EmbeddingMatrix
from .errors import DegenerateInputError, ValidationError
from .linalg import build_whitening, estimate_covariance, whiten_rows

# 5% critical values: Anderson-Darling for a fully specified normal, and
# chi-squared with 2 degrees of freedom.
AD_CRITICAL_5PCT = 2.492
DP_CRITICAL_5PCT = 5.991

_PHI_LO = 1e-300
_PHI_HI = 1.0 - 1e-16


@dataclass(frozen=True)
class EvalReport:
    auc: float
    ap: float
    f1: float
    accuracy: float
    n_real: int
    n_generated: int
    flipped: bool


@dataclass(frozen=True)
class CoordinateNormality:
    coordinate: int
    ad_a2: float
    ad_pvalue: float
    ad_reject: bool
    dp_k2: float
    dp_pvalue: float
    dp_reject: bool


@dataclass(frozen=True)
class NormalityReport:
    per_coordinate: list[CoordinateNormality]
    pass_fraction: float
    m: int
    n_fit: int
    n_holdout: int


def _as_scores(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DegenerateInputError(f"{name} must be a non-empty 1-D score list")
    if not np.isfinite(arr).all():
        raise ValidationError(f"non-finite value in {name}")
    return arr


def auc(real_scores, gen_scores) -> float:
    """P(random generated score > random real score), ties as one half.

    Rank-count implementation; exactly the pairwise count divided by the
    number of pairs.
    """
    real = _as_scores(real_scores, "real_scores")
    gen = _as_scores(gen_scores, "gen_scores")
    real_sorted = np.sort(real)
    below = np.searchsorted(real_sorted, gen, side="left")
    below_or_equal = np.searchsorted(real_sorted, gen, side="right")
    ties = below_or_equal - below
    numerator = float(below.sum()) + 0.5 * float(ties.sum())
    return numerator / (real.size * gen.size)


def average_precision(real_scores, gen_scores) -> float:
    """Mean precision at each positive's rank, generated as positives.

    At equal score, negatives are ranked before positives (pessimistic)
    and otherwise input order is kept.
    """
    real = _as_scores(real_scores, "real_scores")
    gen = _as_scores(gen_scores, "gen_scores")
    scores = np.concatenate([gen, real])
    is_positive = np.concatenate(
        [np.ones(gen.size, dtype=bool), np.zeros(real.size, dtype=bool)]
    )
    # lexsort: major key last. Descending score, then negatives first,
    # then stable input position.
    order = np.lexsort((np.arange(scores.size), is_positive, -scores))
    labels = is_positive[order]
    tp = np.cumsum(labels)
    ranks = np.arange(1, scores.size + 1)
    return float((tp[labels] / ranks[labels]).mean())


def f1_accuracy(labels_pred, labels_true) -> tuple[float, float]:
    """Standard F1 (positive class = generated) and accuracy."""
    if len(labels_pred) != len(labels_true):
        raise ValidationError(
            f"label list lengths differ: {len(labels_pred)} vs {len(labels_true)}"
        )
    if len(labels_pred) == 0:
        raise DegenerateInputError("empty label lists")
    tp = fp = fn = correct = 0
    for pred, true in zip(labels_pred, labels_true):
        if pred == true:
            correct += 1
        if pred is Label.GENERATED and true is Label.GENERATED:
            tp += 1
        elif pred is Label.GENERATED and true is Label.REAL:
            fp += 1
        elif pred is Label.REAL and true is Label.GENERATED:
            fn += 1
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return f1, correct / len(labels_pred)


def evaluate(
    real_records: list[ScoreRecord],
    gen_records: list[ScoreRecord],
    cal: CalibrationResult,
) -> EvalReport:
    """Full report for one real/generated pair of scored sets."""
    if not real_records or not gen_records:
        raise DegenerateInputError("both real and generated record lists must be non-empty")
    m_values = {r.m_used for r in real_records} | {r.m_used for r in gen_records}
    if len(m_values) != 1:
        raise ValidationError(
            f"mixed m_used across evaluation run: {sorted(m_values)}; scores are not comparable"
        )
    real_criteria = [r.criterion for r in real_records]
    gen_criteria = [r.criterion for r in gen_records]
    auc_value = auc(real_criteria, gen_criteria)
    ap_value = average_precision(real_criteria, gen_criteria)
    preds = [classify(r, cal) for r in real_records] + [classify(r, cal) for r in gen_records]
    truth = [Label.REAL] * len(real_records) + [Label.GENERATED] * len(gen_records)
    f1, accuracy = f1_accuracy(preds, truth)
    return EvalReport(
        auc=auc_value,
        ap=ap_value,
        f1=f1,
        accuracy=accuracy,
        n_real=len(real_records),
        n_generated=len(gen_records),
        flipped=auc_value < 0.5,
    )


def _std_normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def anderson_darling_statistic(sample) -> float:
    """The A-squared statistic against N(0, 1), no parameter estimation.

    CDF values are clamped away from 0 and 1 so the logs stay finite; the
    complement term uses the symmetric tail Phi(-z) for accuracy.
    """
    z = np.sort(_as_scores(sample, "sample"))
    n = z.size
    if n < 2:
        raise DegenerateInputError("A-squared needs at least 2 points")
    lo = np.array([_std_normal_cdf(v) for v in z])
    hi = np.array([_std_normal_cdf(-v) for v in z[::-1]])  # 1 - Phi(z_(n+1-i))
    lo = np.clip(lo, _PHI_LO, _PHI_HI)
    hi = np.clip(hi, _PHI_LO, _PHI_HI)
    weights = 2.0 * np.arange(1, n + 1) - 1.0
    s = float((weights * (np.log(lo) + np.log(hi))).sum())
    return -n - s / n


def anderson_darling_pvalue(a2: float) -> float:
    """Asymptotic p-value for the fully specified case (series fit to the
    limiting distribution of A-squared)."""
    z = a2
    if z <= 0:
        return 1.0
    if z < 2.0:
        cdf = (
            math.exp(-1.2337141 / z)
            / math.sqrt(z)
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
        )
    else:
        cdf = math.exp(
            -math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z)
        )
    return min(1.0, max(0.0, 1.0 - cdf))


def anderson_darling(sample) -> tuple[float, bool]:
    """A-squared and the 5%-level rejection decision; needs n >= 8."""
    arr = _as_scores(sample, "sample")
    if arr.size < 8:
        raise DegenerateInputError(f"Anderson-Darling needs n >= 8, got {arr.size}")
    a2 = anderson_darling_statistic(arr)
    return a2, a2 > AD_CRITICAL_5PCT


def skewness_z(sample) -> float:
    """Normalizing transform of the sample skewness (D'Agostino)."""
    x = _as_scores(sample, "sample")
    n = x.size
    if n < 8:
        raise DegenerateInputError(f"skewness transform needs n >= 8, got {n}")
    centered = x - x.mean()
    m2 = float((centered**2).mean())
    m3 = float((centered**3).mean())
    if m2 == 0.0:
        raise DegenerateInputError("zero variance sample")
    b1 = m3 / m2**1.5
    y = b1 * math.sqrt((n + 1) * (n + 3) / (6.0 * (n - 2)))
    beta2 = 3.0 * (n**2 + 27 * n - 70) * (n + 1) * (n + 3) / ((n - 2.0) * (n + 5) * (n + 7) * (n + 9))
    w2 = -1.0 + math.sqrt(2.0 * (beta2 - 1.0))
    delta = 1.0 / math.sqrt(0.5 * math.log(w2))
    alpha = math.sqrt(2.0 / (w2 - 1.0))
    if y == 0.0:
        y = 1.0
    return delta * math.log(y / alpha + math.sqrt((y / alpha) ** 2 + 1.0))


def kurtosis_z(sample) -> float:
    """Normalizing transform of the sample kurtosis (Anscombe-Glynn)."""
    x = _as_scores(sample, "sample")
    n = x.size
    if n < 5:
        raise DegenerateInputError(f"kurtosis transform needs n >= 5, got {n}")
    centered = x - x.mean()
    m2 = float((centered**2).mean())
    m4 = float((centered**4).mean())
    if m2 == 0.0:
        raise DegenerateInputError("zero variance sample")
    b2 = m4 / m2**2
    mean_b2 = 3.0 * (n - 1) / (n + 1)
    var_b2 = 24.0 * n * (n - 2) * (n - 3) / ((n + 1) ** 2 * (n + 3) * (n + 5))
    x_std = (b2 - mean_b2) / math.sqrt(var_b2)
    sqrt_beta1 = (
        6.0
        * (n * n - 5 * n + 2)
        / ((n + 7) * (n + 9))
        * math.sqrt(6.0 * (n + 3) * (n + 5) / (n * (n - 2) * (n - 3)))
    )
    a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + math.sqrt(1.0 + 4.0 / sqrt_beta1**2))
    denom = 1.0 + x_std * math.sqrt(2.0 / (a - 4.0))
    if denom == 0.0:
        raise DegenerateInputError("kurtosis transform hit a zero denominator")
    term2 = math.copysign(abs((1.0 - 2.0 / a) / denom) ** (1.0 / 3.0), denom)
    return ((1.0 - 2.0 / (9.0 * a)) - term2) / math.sqrt(2.0 / (9.0 * a))


def dagostino_pearson(sample) -> tuple[float, bool]:
    """K-squared omnibus statistic and the 5% decision; needs n >= 20."""
    arr = _as_scores(sample, "sample")
    if arr.size < 20:
        raise DegenerateInputError(f"D'Agostino-Pearson needs n >= 20, got {arr.size}")
    z1 = skewness_z(arr)
    z2 = kurtosis_z(arr)
    k2 = z1 * z1 + z2 * z2
    return k2, k2 > DP_CRITICAL_5PCT


def validate_whitening(rep: EmbeddingMatrix, m: int, holdout_fraction: float) -> NormalityReport:
    """Fit whitening on one split, test per-coordinate normality on the other.

    The holdout is the trailing block of rows. A coordinate contributes one
    pass per accepting test; ``pass_fraction`` is the accepted share of all
    2 * m checks.
    """
    if rep.n < 100:
        raise DegenerateInputError(f"validation needs n >= 100 rows, got {rep.n}")
    if not 0.0 < holdout_fraction < 1.0:
        raise ValidationError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")

    n_holdout = min(max(int(round(rep.n * holdout_fraction)), 20), rep.n - 2)
    fit_rows = rep.data64[: rep.n - n_holdout]
    holdout_rows = rep.data64[rep.n - n_holdout :]

    model = build_whitening(estimate_covariance(fit_rows), min(m, rep.d))
    whitened = whiten_rows(model, holdout_rows)

    per_coordinate = []
    passes = 0
    for j in range(model.m):
        column = whitened[:, j]
        a2, ad_reject = anderson_darling(column)
        k2, dp_reject = dagostino_pearson(column)
        per_coordinate.append(
            CoordinateNormality(
                coordinate=j,
                ad_a2=a2,
                ad_pvalue=anderson_darling_pvalue(a2),
                ad_reject=ad_reject,
                dp_k2=k2,
                dp_pvalue=math.exp(-k2 / 2.0),
                dp_reject=dp_reject,
            )
        )
        passes += (not ad_reject) + (not dp_reject)
    return NormalityReport(
        per_coordinate=per_coordinate,
        pass_fraction=passes / (2 * model.m),
        m=model.m,
        n_fit=rep.n - n_holdout,
        n_holdout=n_holdout,
    )
