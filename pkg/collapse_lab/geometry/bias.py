"""
BCE bias fixed point.

At a collapsed BCE minimizer every class shares one bias b*, the root of

    alpha(b) = -(K-1) / (K (1 + exp(b + c))) + 1 / (K (1 + exp(A - b))) + lambda_b b

with A = a rho / K, c = a rho / (K (K-1)) and a = sqrt(lambda_w / (n lambda_h)).
K alpha(b) = beta1(b) - beta2(b) where beta1 increases and beta2 decreases,
so the root is unique and bisection always finds it.

Usage:
    prob = BiasProblem.from_hyperparams(rho=110.0, hp=hp)
    b_star = solve_bias(prob)
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import bisect
from scipy.special import expit

from ..errors import ConfigError, SolverError
from ..model.core import HyperParams

logger = logging.getLogger(__name__)

# Bracket doublings before giving up
MAX_EXPANSIONS = 64

# Bisection controls; residual slope is at most 1/4 + lambda_b
BISECT_XTOL = 1e-14
BISECT_MAXITER = 400
RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class BiasProblem:
    """
    Inputs of the bias equation.

    `n` is real: checkpoints audited from minibatch training use an
    effective per-class count of batch_size / K.
    """
    rho: float
    K: int
    n: float
    lambda_w: float
    lambda_h: float
    lambda_b: float

    def __post_init__(self):
        if not self.rho >= 0:
            raise ConfigError(f"rho must be >= 0, got {self.rho}")
        if self.K < 2:
            raise ConfigError(f"K must be >= 2, got {self.K}")
        if not self.n > 0:
            raise ConfigError(f"n must be > 0, got {self.n}")
        if not self.lambda_w > 0 or not self.lambda_h > 0 or not self.lambda_b >= 0:
            raise ConfigError("weight decays must satisfy lambda_w, lambda_h > 0 and lambda_b >= 0")

    @classmethod
    def from_hyperparams(
        cls, rho: float, hp: HyperParams, n: Optional[float] = None
    ) -> "BiasProblem":
        return cls(
            rho=float(rho),
            K=hp.K,
            n=float(hp.n if n is None else n),
            lambda_w=hp.lambda_w,
            lambda_h=hp.lambda_h,
            lambda_b=hp.lambda_b,
        )

    @property
    def feature_scale(self) -> float:
        return math.sqrt(self.lambda_w / (self.n * self.lambda_h))

    @property
    def positive_score(self) -> float:
        """Bias-free positive score a rho / K at collapse."""
        return self.feature_scale * self.rho / self.K

    @property
    def negative_score(self) -> float:
        """Bias-free negative score -a rho / (K (K-1)) at collapse."""
        return -self.feature_scale * self.rho / (self.K * (self.K - 1))


def alpha_residual(b, prob: BiasProblem):
    """Residual of the bias equation; zero exactly at b*."""
    K = prob.K
    pos, neg = prob.positive_score, prob.negative_score
    # 1/(1+exp(x)) == expit(-x)
    return (-(K - 1) / K * expit(neg - b)
            + expit(b - pos) / K
            + prob.lambda_b * b)


def beta1(b, prob: BiasProblem):
    """Strictly increasing part: lambda_b K b + sigmoid(b - a rho / K)."""
    return prob.lambda_b * prob.K * b + expit(b - prob.positive_score)


def beta2(b, prob: BiasProblem):
    """Strictly decreasing part: (K-1) sigmoid(-b - a rho / (K (K-1)))."""
    return (prob.K - 1) * expit(prob.negative_score - b)


def bracket(prob: BiasProblem) -> tuple:
    """Symmetric interval [-B, B] on which alpha changes sign."""
    half = prob.positive_score + math.log(prob.K) + 1.0
    for _ in range(MAX_EXPANSIONS):
        lo, hi = alpha_residual(-half, prob), alpha_residual(half, prob)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise SolverError(f"non-finite bias residual on [-{half}, {half}]")
        if lo <= 0.0 <= hi:
            return -half, half
        logger.debug(f"Expanding bias bracket beyond {half}")
        half *= 2.0
    raise SolverError(f"no sign change of the bias residual within +-{half}")


def solve_bias(prob: BiasProblem) -> float:
    """Unique root b* of alpha_residual by bracket expansion and bisection."""
    lo, hi = bracket(prob)
    b_star = float(bisect(alpha_residual, lo, hi, args=(prob,),
                          xtol=BISECT_XTOL, maxiter=BISECT_MAXITER))
    residual = float(alpha_residual(b_star, prob))
    if not math.isfinite(residual):
        raise SolverError(f"non-finite residual at b={b_star}")
    if abs(residual) >= RESIDUAL_TOL:
        logger.warning(f"Bias residual {residual:.3e} at b*={b_star} above {RESIDUAL_TOL}")
    return b_star


def separation_holds(prob: BiasProblem) -> bool:
    """
    Sufficient condition for the bias to separate all positive scores from
    all negative ones. Needs K > 2.
    """
    K = prob.K
    if K <= 2:
        return False
    s = prob.feature_scale * prob.rho / (K - 1)
    lhs = prob.lambda_b * s + 1.0 / (2.0 * (K - 1))
    rhs = float(expit(-s))
    return bool(lhs > rhs)


def alpha_grid(prob: BiasProblem, b_values: np.ndarray) -> np.ndarray:
    """Vectorized residual over a grid of b values."""
    return np.asarray(alpha_residual(np.asarray(b_values, dtype=np.float64), prob))
