"""
Feature compactness and distinctiveness, in percent.

E_com averages the within-class pairwise cosine of globally centered
features (self pairs included); E_dis is one minus the average cross-class
cosine of raw features. Both map [-1, 1] onto [0, 100].
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import MetricError, ShapeError
from .collapse import present_classes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureProperties:
    e_com: float
    e_dis: float
    # pairs skipped because one of the vectors had zero norm
    excluded_pairs: int = 0


def _unit_columns(X: np.ndarray):
    norms = np.linalg.norm(X, axis=0)
    valid = norms > 0
    unit = np.zeros_like(X)
    unit[:, valid] = X[:, valid] / norms[valid]
    return unit, valid


def feature_properties(H: np.ndarray, labels: np.ndarray) -> FeatureProperties:
    """
    Mean pairwise cosine over a pair of groups equals the inner product of
    the groups' mean unit vectors, which keeps this O(N d).
    """
    H = np.asarray(H, dtype=np.float64)
    labels = np.asarray(labels)
    if H.ndim != 2 or labels.shape != (H.shape[1],):
        raise ShapeError(f"H {H.shape} does not match {labels.shape} labels")
    classes = present_classes(labels)
    if classes.size < 2:
        raise MetricError(f"feature properties need at least 2 classes, got {classes.size}")

    excluded = 0

    centered, valid_c = _unit_columns(H - H.mean(axis=1, keepdims=True))
    com_terms = []
    for k in classes:
        member = labels == k
        good = member & valid_c
        excluded += int(member.sum() ** 2 - good.sum() ** 2)
        if good.any():
            m = centered[:, good].mean(axis=1)
            com_terms.append(float(m @ m))

    raw, valid_r = _unit_columns(H)
    means, counts, totals = [], [], []
    for k in classes:
        member = labels == k
        good = member & valid_r
        totals.append(int(member.sum()))
        counts.append(int(good.sum()))
        means.append(raw[:, good].mean(axis=1) if good.any() else None)

    dis_terms = []
    for i in range(classes.size):
        for j in range(classes.size):
            if i == j:
                continue
            excluded += totals[i] * totals[j] - counts[i] * counts[j]
            if means[i] is not None and means[j] is not None:
                dis_terms.append(float(means[i] @ means[j]))

    if not com_terms or not dis_terms:
        raise MetricError("every cosine pair involves a zero-norm feature")
    if excluded:
        logger.warning(f"Excluded {excluded} feature pairs with zero-norm vectors")

    return FeatureProperties(
        e_com=float(0.5 * (np.mean(com_terms) + 1.0) * 100.0),
        e_dis=float(0.5 * (1.0 - np.mean(dis_terms)) * 100.0),
        excluded_pairs=excluded,
    )
