"""
CE, BCE and naive-BCE losses with the regularized objective and its
analytic gradient.

All losses are written on the score matrix Z (K x N); labels are 0-based
class indices. The objective is

    f(W, H, b) = mean_i L(Z[:, i], y_i)
                 + lambda_w/2 |W|^2 + lambda_h/2 |H|^2 + lambda_b/2 |b|^2
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit, softmax

from ..errors import ConfigError, LabelError, ShapeError
from .core import HyperParams, ModelState, class_major_labels, scores, validate_labels

logger = logging.getLogger(__name__)


class LossKind(Enum):
    """Classification loss."""
    CE = "ce"
    BCE = "bce"
    NAIVE_BCE = "naive_bce"

    @classmethod
    def parse(cls, text: str) -> "LossKind":
        key = text.strip().lower().replace("-", "_")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ConfigError(f"unknown loss '{text}' (expected ce, bce or naive_bce)")

    def check_classes(self, K: int) -> None:
        if self is LossKind.NAIVE_BCE and K != 2:
            raise ConfigError(f"naive_bce needs exactly 2 classes, got K={K}")


def softplus(x):
    """log(1 + exp(x)) without overflow."""
    return np.logaddexp(0.0, x)


# ─────────────────────────────────────────────────────────────────────────────
# Per-sample losses
# ─────────────────────────────────────────────────────────────────────────────

def _one_hot(labels: np.ndarray, K: int) -> np.ndarray:
    Y = np.zeros((K, labels.shape[0]))
    Y[labels, np.arange(labels.shape[0])] = 1.0
    return Y


def _naive_sign(labels: np.ndarray) -> np.ndarray:
    # class index 0 takes softplus(+zdiff), class index 1 softplus(-zdiff)
    return np.where(labels == 0, 1.0, -1.0)


def loss_per_sample(kind: LossKind, Z: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Loss of every score column, shape (N,)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ShapeError(f"Z must be 2-D, got shape {Z.shape}")
    K, N = Z.shape
    kind.check_classes(K)
    labels = validate_labels(labels, K, N)
    cols = np.arange(N)

    if kind is LossKind.CE:
        D = Z - Z[labels, cols]
        D[labels, cols] = -np.inf
        m = np.maximum(D.max(axis=0), 0.0)
        s = np.exp(D - m).sum(axis=0)
        return np.where(m > 0.0, m + np.log(np.exp(-m) + s), np.log1p(s))

    if kind is LossKind.BCE:
        Y = _one_hot(labels, K)
        return (softplus(Z) * (1.0 - Y)).sum(axis=0) + softplus(-Z[labels, cols])

    zdiff = Z[0] - Z[1]
    return softplus(_naive_sign(labels) * zdiff)


def loss_value(kind: LossKind, z: np.ndarray, label: int) -> float:
    """Loss of one score column z (length K) with 0-based label."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise ShapeError(f"z must be a vector, got shape {z.shape}")
    if not 0 <= label < z.shape[0]:
        raise LabelError(f"label {label} outside [0, {z.shape[0]})")
    return float(loss_per_sample(kind, z[:, None], np.array([label]))[0])


def per_score_gradient(kind: LossKind, Z: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """
    dL/dz for every column (K x N).

    CE gives softmax(z) - onehot, BCE gives sigmoid(z) - onehot. Naive BCE
    only moves the two scores through their difference.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ShapeError(f"Z must be 2-D, got shape {Z.shape}")
    K, N = Z.shape
    kind.check_classes(K)
    labels = validate_labels(labels, K, N)

    if kind is LossKind.CE:
        return softmax(Z, axis=0) - _one_hot(labels, K)
    if kind is LossKind.BCE:
        return expit(Z) - _one_hot(labels, K)

    s = _naive_sign(labels)
    g = s * expit(s * (Z[0] - Z[1]))
    return np.vstack([g, -g])


# ─────────────────────────────────────────────────────────────────────────────
# Objective and gradient
# ─────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Gradient:
    """Gradient of the objective with respect to (W, H, b)."""
    dW: np.ndarray
    dH: np.ndarray
    db: np.ndarray

    def inf_norm(self) -> float:
        return float(max(np.abs(self.dW).max(initial=0.0),
                         np.abs(self.dH).max(initial=0.0),
                         np.abs(self.db).max(initial=0.0)))


def _regularizer(W, H, b, hp: HyperParams) -> float:
    return 0.5 * (hp.lambda_w * float(np.sum(W * W))
                  + hp.lambda_h * float(np.sum(H * H))
                  + hp.lambda_b * float(np.sum(b * b)))


def loss_and_gradient(
    W: np.ndarray,
    H: np.ndarray,
    b: np.ndarray,
    hp: HyperParams,
    kind: LossKind,
    labels: np.ndarray,
    columns: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """
    Objective value and gradient on raw arrays.

    With `columns`, the loss term is averaged over those columns only
    (minibatch estimate); regularization always covers every variable.

    Returns:
        (value, dW, dH, db)
    """
    if columns is None:
        Hs, ys = H, labels
    else:
        Hs, ys = H[:, columns], labels[columns]
    count = Hs.shape[1]
    if count == 0:
        raise ShapeError("no feature columns to evaluate")

    Z = scores(W, Hs, b)
    value = float(loss_per_sample(kind, Z, ys).mean()) + _regularizer(W, H, b, hp)

    G = per_score_gradient(kind, Z, ys) / count
    dW = G @ Hs.T + hp.lambda_w * W
    dH = hp.lambda_h * H
    if columns is None:
        dH = dH + W.T @ G
    else:
        dH = dH.copy()
        dH[:, columns] += W.T @ G
    db = -G.sum(axis=1) + hp.lambda_b * b
    return value, dW, dH, db


def _labels_for(state: ModelState, hp: HyperParams, labels: Optional[np.ndarray]) -> np.ndarray:
    if not state.matches(hp):
        raise ShapeError(
            f"state is K={state.K} d={state.d} N={state.N}, "
            f"hyperparameters expect K={hp.K} d={hp.d} N={hp.N}"
        )
    if labels is None:
        return class_major_labels(hp.K, hp.n)
    return validate_labels(labels, hp.K, hp.N)


def objective(
    state: ModelState,
    hp: HyperParams,
    kind: LossKind,
    labels: Optional[np.ndarray] = None,
) -> float:
    """Regularized objective; labels default to the class-major layout."""
    labels = _labels_for(state, hp, labels)
    Z = scores(state.W, state.H, state.b)
    loss = float(loss_per_sample(kind, Z, labels).mean())
    return loss + _regularizer(state.W, state.H, state.b, hp)


def grad_objective(
    state: ModelState,
    hp: HyperParams,
    kind: LossKind,
    labels: Optional[np.ndarray] = None,
) -> Gradient:
    """Analytic gradient of the regularized objective."""
    labels = _labels_for(state, hp, labels)
    _, dW, dH, db = loss_and_gradient(state.W, state.H, state.b, hp, kind, labels)
    return Gradient(dW=dW, dH=dH, db=db)
