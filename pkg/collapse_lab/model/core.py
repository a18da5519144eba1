"""
Layer-peeled model core.

The model keeps the classifier W (K x d), the features H (d x N) and the
bias b (K) as free variables. Features are stored class-major: class k
owns columns [k*n, (k+1)*n). Decision scores are Z = W H - b 1^T.

Usage:
    hp = HyperParams(K=4, d=8, n=10)
    state = init_state(hp, InitConfig(seed=0))
    Z = decision_scores(state)
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import ConfigError, LabelError, ShapeError, StateError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HyperParams:
    """Problem dimensions and weight-decay strengths."""

    # Class count, feature dimension, samples per class
    K: int
    d: int
    n: int

    # Weight decay on W, H and b
    lambda_w: float = 5e-4
    lambda_h: float = 5e-4
    lambda_b: float = 5e-4

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError(f"K must be >= 2, got {self.K}")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not self.lambda_w > 0 or not self.lambda_h > 0:
            raise ConfigError(
                f"lambda_w and lambda_h must be > 0, got {self.lambda_w}, {self.lambda_h}"
            )
        if not self.lambda_b >= 0:
            raise ConfigError(f"lambda_b must be >= 0, got {self.lambda_b}")

    @property
    def N(self) -> int:
        """Total number of feature columns."""
        return self.n * self.K

    @property
    def etf_feasible(self) -> bool:
        """A K-simplex ETF fits in d dimensions."""
        return self.d >= self.K - 1

    @property
    def feature_scale(self) -> float:
        """Ratio a = sqrt(lambda_w / (n lambda_h)) between collapsed h and w."""
        return math.sqrt(self.lambda_w / (self.n * self.lambda_h))

    def with_lambda_b(self, lambda_b: float) -> "HyperParams":
        return replace(self, lambda_b=lambda_b)


@dataclass(frozen=True)
class InitConfig:
    """Random initialization settings."""
    seed: int = 0
    bias_mean_offset: float = 0.0

    def with_offset(self, offset: float) -> "InitConfig":
        return replace(self, bias_mean_offset=offset)


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelState:
    """
    The free variables (W, H, b).

    Arrays are copied to read-only float64 on construction, so a state can
    be shared between threads without locking.
    """
    W: np.ndarray
    H: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W, H, b = _frozen(self.W), _frozen(self.H), _frozen(self.b)
        check_dimensions(W, H, b)
        for name, arr in (("W", W), ("H", H), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise StateError(f"ModelState.{name} has non-finite entries")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "b", b)

    @property
    def K(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def N(self) -> int:
        return self.H.shape[1]

    @property
    def rho(self) -> float:
        """Squared Frobenius norm of W."""
        return float(np.sum(self.W * self.W))

    def matches(self, hp: HyperParams) -> bool:
        return (self.K, self.d, self.N) == (hp.K, hp.d, hp.N)


# ─────────────────────────────────────────────────────────────────────────────
# Labels
# ─────────────────────────────────────────────────────────────────────────────

def class_major_labels(K: int, n: int) -> np.ndarray:
    """Labels of a class-major layout: column c belongs to class c // n."""
    return np.repeat(np.arange(K), n)


def validate_labels(labels: np.ndarray, K: int, N: int) -> np.ndarray:
    """Return labels as an int array after range and length checks."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != N:
        raise ShapeError(f"expected {N} labels, got shape {labels.shape}")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        raise LabelError(f"labels must be integers, got dtype {labels.dtype}")
    labels = labels.astype(np.int64, copy=False)
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        bad = labels[(labels < 0) | (labels >= K)][0]
        raise LabelError(f"label {bad} outside [0, {K})")
    return labels


# ─────────────────────────────────────────────────────────────────────────────
# Scores
# ─────────────────────────────────────────────────────────────────────────────

def check_dimensions(W: np.ndarray, H: np.ndarray, b: np.ndarray) -> None:
    if W.ndim != 2 or H.ndim != 2 or b.ndim != 1:
        raise ShapeError(
            f"expected W 2-D, H 2-D, b 1-D; got {W.ndim}, {H.ndim}, {b.ndim} dims"
        )
    if W.shape[1] != H.shape[0]:
        raise ShapeError(f"W is {W.shape} but H is {H.shape}")
    if b.shape[0] != W.shape[0]:
        raise ShapeError(f"W has {W.shape[0]} rows but b has {b.shape[0]} entries")


def scores(W: np.ndarray, H: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
    """Z = W H - b 1^T on raw arrays; b=None means no bias."""
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    b = np.zeros(W.shape[0]) if b is None else np.asarray(b, dtype=np.float64)
    check_dimensions(W, H, b)
    return W @ H - b[:, None]


def decision_scores(state: ModelState) -> np.ndarray:
    """Score matrix (K x N) of a model state."""
    return scores(state.W, state.H, state.b)


# ─────────────────────────────────────────────────────────────────────────────
# Initialization
# ─────────────────────────────────────────────────────────────────────────────

def init_state(hp: HyperParams, cfg: InitConfig) -> ModelState:
    """
    Kaiming-uniform style initialization.

    W ~ U(+-sqrt(6/d)), b ~ U(+-1/sqrt(d)) + bias_mean_offset,
    H ~ N(0, (1/sqrt(d))^2). Draw order is W, b, H from one generator.
    """
    if not math.isfinite(cfg.bias_mean_offset):
        raise ConfigError(f"bias_mean_offset must be finite, got {cfg.bias_mean_offset}")

    rng = np.random.default_rng(cfg.seed)
    w_bound = math.sqrt(6.0 / hp.d)
    b_bound = 1.0 / math.sqrt(hp.d)

    W = rng.uniform(-w_bound, w_bound, size=(hp.K, hp.d))
    b = rng.uniform(-b_bound, b_bound, size=hp.K) + cfg.bias_mean_offset
    H = rng.normal(0.0, 1.0 / math.sqrt(hp.d), size=(hp.d, hp.N))

    logger.debug(f"Initialized state K={hp.K} d={hp.d} N={hp.N} seed={cfg.seed}")
    return ModelState(W=W, H=H, b=b)
