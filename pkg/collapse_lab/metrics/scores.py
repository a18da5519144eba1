"""
Decision-score metrics: accuracy, uniform accuracy, score statistics and
the ideal-score conditions.

For a sample of class k the positive score is Z[k, i]; the other entries
of its column are negative scores.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import ConfigError, ShapeError
from ..model.core import validate_labels

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = 200


def split_scores(Z: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns:
        (positive scores (N,), negative scores flattened, per-sample max negative (N,))
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ShapeError(f"Z must be 2-D, got shape {Z.shape}")
    K, N = Z.shape
    labels = validate_labels(labels, K, N)
    cols = np.arange(N)

    positive = Z[labels, cols]
    mask = np.ones(Z.shape, dtype=bool)
    mask[labels, cols] = False
    negative = Z.T[mask.T]
    neg_max = np.where(mask, Z, -np.inf).max(axis=0)
    return positive, negative, neg_max


def accuracy(Z: np.ndarray, labels: np.ndarray) -> float:
    """Percent of columns whose argmax (smallest index on ties) is the label."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ShapeError(f"Z must be 2-D, got shape {Z.shape}")
    labels = validate_labels(labels, *Z.shape)
    if labels.size == 0:
        return 0.0
    return float(np.mean(np.argmax(Z, axis=0) == labels) * 100.0)


def uniform_accuracy(Z: np.ndarray, labels: np.ndarray,
                     n_thresholds: int = DEFAULT_THRESHOLDS) -> float:
    """
    Best percent of samples classified by one global threshold t, i.e.
    with positive score > t >= every negative score of the sample.

    Thresholds are evenly spaced over [min positive, max negative],
    both endpoints included.
    """
    if n_thresholds < 1:
        raise ConfigError(f"n_thresholds must be >= 1, got {n_thresholds}")
    positive, negative, neg_max = split_scores(Z, labels)
    if positive.size == 0:
        return 0.0

    low, high = positive.min(), negative.max()
    if low > high:
        return 100.0

    t = np.linspace(low, high, n_thresholds)[:, None]
    hits = (positive[None, :] > t) & (neg_max[None, :] <= t)
    return float(hits.mean(axis=1).max() * 100.0)


# ─────────────────────────────────────────────────────────────────────────────
# Score statistics
# ─────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ScoreStats:
    """Population moments of bias-free positive and negative scores."""
    pos_mean: float
    pos_std: float
    neg_mean: float
    neg_std: float


def score_stats(Z_nobias: np.ndarray, labels: np.ndarray) -> ScoreStats:
    positive, negative, _ = split_scores(Z_nobias, labels)
    return ScoreStats(
        pos_mean=float(positive.mean()),
        pos_std=float(positive.std()),
        neg_mean=float(negative.mean()),
        neg_std=float(negative.std()),
    )


@dataclass(frozen=True)
class ScoreConditions:
    """
    How close the scores are to the ideal ones.

    ce_fraction: samples whose positive score beats all their negatives.
    bce_fraction: samples with positive score > 0 and all negatives < 0.
    uniform: one threshold separates every positive from every negative.
    gap: min positive - max negative (positive iff uniform).
    """
    ce_fraction: float
    bce_fraction: float
    uniform: bool
    gap: float


def ideal_score_conditions(Z: np.ndarray, labels: np.ndarray) -> ScoreConditions:
    positive, negative, neg_max = split_scores(Z, labels)
    gap = float(positive.min() - negative.max())
    return ScoreConditions(
        ce_fraction=float(np.mean(positive > neg_max)),
        bce_fraction=float(np.mean((positive > 0) & (neg_max < 0))),
        uniform=gap > 0,
        gap=gap,
    )


def bias_separates(Z_nobias: np.ndarray, labels: np.ndarray, threshold: float) -> bool:
    """All bias-free positive scores above `threshold`, all negatives below."""
    positive, negative, _ = split_scores(Z_nobias, labels)
    return bool(positive.min() > threshold > negative.max())
