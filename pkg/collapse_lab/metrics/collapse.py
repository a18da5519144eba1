"""
Neural-collapse metrics.

NC1: within-class variability relative to between-class spread,
     (1/K) tr(Sigma_W Sigma_B^+).
NC2: distance of the (centered) classifier Gram to the simplex ETF frame.
NC3: distance of W H~ (classifier against centered class means) to the
     same frame.

Features are columns of H (d x N); labels are 0-based.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import pinvh

from ..errors import MetricError, ShapeError
from ..model.core import HyperParams, scores, validate_labels

logger = logging.getLogger(__name__)

# Eigenvalues below this fraction of the largest are dropped in Sigma_B^+
PINV_RTOL = 1e-10


@dataclass(frozen=True)
class NCMetrics:
    nc1: float
    nc2: float
    nc3: float


def present_classes(labels: np.ndarray) -> np.ndarray:
    return np.unique(labels)


def class_means(H: np.ndarray, labels: np.ndarray, classes: np.ndarray) -> np.ndarray:
    """d x len(classes) matrix of per-class feature means."""
    return np.stack([H[:, labels == k].mean(axis=1) for k in classes], axis=1)


def etf_frame(K: int) -> np.ndarray:
    """Centering matrix I - 11^T/K normalized to unit Frobenius norm."""
    return (np.eye(K) - np.full((K, K), 1.0 / K)) / math.sqrt(K - 1)


def _distance_to_frame(M: np.ndarray) -> float:
    norm = np.linalg.norm(M)
    unit = M / norm if norm > 0 else np.zeros_like(M)
    return float(np.linalg.norm(unit - etf_frame(M.shape[0])))


def _check_inputs(W: np.ndarray, H: np.ndarray, labels: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    if W.ndim != 2 or H.ndim != 2 or W.shape[1] != H.shape[0]:
        raise ShapeError(f"W {W.shape} and H {H.shape} do not agree")
    return validate_labels(labels, W.shape[0], H.shape[1])


def nc1(H: np.ndarray, labels: np.ndarray) -> float:
    """Within-class collapse; 0 for exact collapse, +inf if class means coincide."""
    classes = present_classes(labels)
    if classes.size < 2:
        raise MetricError(f"NC1 needs at least 2 classes, got {classes.size}")
    N = H.shape[1]
    means = class_means(H, labels, classes)
    global_mean = H.mean(axis=1)

    within = H - means[:, np.searchsorted(classes, labels)]
    sigma_w = within @ within.T / N
    between = means - global_mean[:, None]
    sigma_b = between @ between.T / classes.size

    if not np.any(sigma_b):
        if not np.any(sigma_w):
            return 0.0
        logger.warning("Class means coincide: NC1 is +inf")
        return math.inf
    return float(np.trace(sigma_w @ pinvh(sigma_b, rtol=PINV_RTOL)) / classes.size)


def nc_metrics(
    W: np.ndarray, H: np.ndarray, labels: np.ndarray, centered: bool = True
) -> NCMetrics:
    """
    NC1, NC2 and NC3 over the classes present in `labels`.

    With centered=False the classifier Gram of NC2 uses raw W rows.
    """
    labels = _check_inputs(W, H, labels)
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    classes = present_classes(labels)
    if classes.size < 2:
        raise MetricError(f"collapse metrics need at least 2 classes, got {classes.size}")

    Wp = W[classes]
    W_tilde = Wp - Wp.mean(axis=0) if centered else Wp
    nc2 = _distance_to_frame(W_tilde @ W_tilde.T)

    H_tilde = class_means(H, labels, classes) - H.mean(axis=1)[:, None]
    nc3 = _distance_to_frame(Wp @ H_tilde)

    return NCMetrics(nc1=nc1(H, labels), nc2=nc2, nc3=nc3)


def nc4_agreement(
    W: np.ndarray, H: np.ndarray, b: np.ndarray, labels: np.ndarray
) -> Tuple[bool, float]:
    """
    Whether the classifier's argmax agrees with nearest-class-mean
    prediction on every sample, and the agreeing fraction.
    """
    labels = _check_inputs(W, H, labels)
    H = np.asarray(H, dtype=np.float64)
    classes = present_classes(labels)
    means = class_means(H, labels, classes)

    by_score = np.argmax(scores(W, H, b), axis=0)
    dist = ((H[:, None, :] - means[:, :, None]) ** 2).sum(axis=0)
    by_mean = classes[np.argmin(dist, axis=0)]

    agree = by_score == by_mean
    return bool(agree.all()), float(agree.mean())


def norm_coupling_residual(W: np.ndarray, H: np.ndarray, hp: HyperParams) -> float:
    """|W^T W - (lambda_h/lambda_w) H H^T|_F / |W^T W|_F; zero at critical points."""
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    gram_w = W.T @ W
    gram_h = H @ H.T
    denom = np.linalg.norm(gram_w)
    if denom == 0:
        raise MetricError("W is zero; coupling residual undefined")
    return float(np.linalg.norm(gram_w - hp.lambda_h / hp.lambda_w * gram_h) / denom)
