"""
Full metrics report for one (W, H, b).
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np

from ..geometry.bias import BiasProblem, alpha_residual
from ..model.core import HyperParams, ModelState, class_major_labels, scores, validate_labels
from .collapse import nc_metrics
from .features import feature_properties
from .scores import DEFAULT_THRESHOLDS, ScoreStats, accuracy, score_stats, uniform_accuracy

logger = logging.getLogger(__name__)

# Column order of the metric part of trajectory and summary CSVs
REPORT_COLUMNS = [
    "nc1", "nc2", "nc3",
    "accuracy", "uniform_accuracy",
    "e_com", "e_dis",
    "pos_mean", "pos_std", "neg_mean", "neg_std",
    "bias_mean", "bias_std",
    "rho", "alpha_at_bias",
]


@dataclass(frozen=True)
class MetricsReport:
    nc1: float
    nc2: float
    nc3: float
    accuracy: float
    uniform_accuracy: float
    e_com: float
    e_dis: float
    score_stats: ScoreStats
    rho: float
    bias_mean: float
    bias_std: float
    alpha_at_bias: float

    def as_row(self) -> Dict[str, float]:
        """Flat mapping in REPORT_COLUMNS order."""
        flat = asdict(self)
        flat.update(flat.pop("score_stats"))
        return {name: flat[name] for name in REPORT_COLUMNS}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        data = dict(data)
        data["score_stats"] = ScoreStats(**data["score_stats"])
        return cls(**data)


def compute_report(
    W: np.ndarray,
    H: np.ndarray,
    b: np.ndarray,
    labels: np.ndarray,
    n_for_alpha: float,
    lambda_w: float,
    lambda_h: float,
    lambda_b: float,
    n_thresholds: int = DEFAULT_THRESHOLDS,
    centered: bool = True,
) -> MetricsReport:
    """
    Every metric of (W, H, b). `n_for_alpha` is the per-class count used in
    the bias residual; audits of minibatch checkpoints pass batch_size / K.
    """
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    Z_nobias = scores(W, H)
    labels = validate_labels(labels, W.shape[0], H.shape[1])
    Z = Z_nobias - b[:, None]

    nc = nc_metrics(W, H, labels, centered=centered)
    props = feature_properties(H, labels)
    rho = float(np.sum(W * W))
    bias_mean = float(b.mean())
    problem = BiasProblem(rho=rho, K=W.shape[0], n=float(n_for_alpha),
                          lambda_w=lambda_w, lambda_h=lambda_h, lambda_b=lambda_b)

    return MetricsReport(
        nc1=nc.nc1,
        nc2=nc.nc2,
        nc3=nc.nc3,
        accuracy=accuracy(Z, labels),
        uniform_accuracy=uniform_accuracy(Z, labels, n_thresholds),
        e_com=props.e_com,
        e_dis=props.e_dis,
        score_stats=score_stats(Z_nobias, labels),
        rho=rho,
        bias_mean=bias_mean,
        bias_std=float(b.std()),
        alpha_at_bias=float(alpha_residual(bias_mean, problem)),
    )


def evaluate_state(
    state: ModelState,
    hp: HyperParams,
    labels: Optional[np.ndarray] = None,
    n_for_alpha: Optional[float] = None,
    n_thresholds: int = DEFAULT_THRESHOLDS,
    centered: bool = True,
) -> MetricsReport:
    """Report for a model state; labels default to the class-major layout."""
    if labels is None:
        labels = class_major_labels(hp.K, hp.n)
    return compute_report(
        state.W, state.H, state.b, labels,
        n_for_alpha=hp.n if n_for_alpha is None else n_for_alpha,
        lambda_w=hp.lambda_w,
        lambda_h=hp.lambda_h,
        lambda_b=hp.lambda_b,
        n_thresholds=n_thresholds,
        centered=centered,
    )
