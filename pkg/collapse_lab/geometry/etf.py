"""
Simplex ETF geometry and the analytic collapsed minimizers.

At a global minimizer the classifier rows form a K-simplex ETF with
|W|_F^2 = rho, every feature of class k equals a * w_k with
a = sqrt(lambda_w / (n lambda_h)), and every class shares one bias b.
The objective then depends on (rho, b) only, which this module evaluates,
minimizes and bounds from below.

Usage:
    point = optimal_point(hp, LossKind.BCE)
    state = analytic_minimizer(hp, point.rho, point.b)
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize_scalar
from scipy.special import expit

from ..errors import ConfigError, SolverError
from ..model.core import HyperParams, ModelState, class_major_labels
from ..model.losses import LossKind, softplus
from .bias import BiasProblem, solve_bias

logger = logging.getLogger(__name__)

# Coarse rho grid for the (rho*, b*) oracle
RHO_GRID = np.logspace(-4.0, 8.0, 241)

# Golden-section relative tolerance
GOLDEN_TOL = 1e-12


@dataclass(frozen=True)
class EtfSpec:
    """Target simplex ETF: K rows in R^d with squared Frobenius norm rho."""
    K: int
    d: int
    rho: float
    orientation_seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError(f"K must be >= 2, got {self.K}")
        if self.d < self.K - 1:
            raise ConfigError(f"a {self.K}-simplex ETF needs d >= {self.K - 1}, got d={self.d}")
        if not self.rho > 0:
            raise ConfigError(f"rho must be > 0, got {self.rho}")


def simplex_etf(spec: EtfSpec) -> np.ndarray:
    """
    K x d classifier whose Gram matrix is rho/(K-1) (I - 11^T/K).

    The centered frame is an orthonormal basis of the complement of 1_K;
    it is embedded in R^d through a seeded random orthonormal basis.
    """
    K, d = spec.K, spec.d
    frame = null_space(np.ones((1, K)))  # K x (K-1), orthonormal, columns sum to 0
    rng = np.random.default_rng(spec.orientation_seed)
    basis, _ = np.linalg.qr(rng.standard_normal((d, K - 1)))
    return math.sqrt(spec.rho / (K - 1)) * frame @ basis.T


def analytic_minimizer(
    hp: HyperParams, rho: float, b_star: float, orientation_seed: int = 0
) -> ModelState:
    """Collapsed state: ETF classifier, features a * w_k, shared bias."""
    if not hp.etf_feasible:
        raise ConfigError(f"collapsed minimizer needs d >= K-1, got K={hp.K} d={hp.d}")
    W = simplex_etf(EtfSpec(hp.K, hp.d, rho, orientation_seed))
    H = hp.feature_scale * W[class_major_labels(hp.K, hp.n)].T
    b = np.full(hp.K, float(b_star))
    return ModelState(W=W, H=H, b=b)


# ─────────────────────────────────────────────────────────────────────────────
# Reduced objective on (rho, b)
# ─────────────────────────────────────────────────────────────────────────────

def _score_levels(rho: float, hp: HyperParams) -> Tuple[float, float]:
    a = hp.feature_scale
    return a * rho / hp.K, a * rho / (hp.K * (hp.K - 1))


def _check_kind(kind: LossKind) -> None:
    if kind not in (LossKind.CE, LossKind.BCE):
        raise ConfigError(f"reduced objective is defined for ce and bce, not {kind.value}")


def reduced_objective(kind: LossKind, rho: float, b: float, hp: HyperParams) -> float:
    """Objective of the collapsed state with squared norm rho and bias b."""
    _check_kind(kind)
    if rho < 0:
        raise ConfigError(f"rho must be >= 0, got {rho}")
    pos, neg = _score_levels(rho, hp)
    K = hp.K
    if kind is LossKind.BCE:
        loss = softplus(b - pos) + (K - 1) * softplus(-neg - b)
    else:
        loss = np.log1p((K - 1) * np.exp(-(pos + neg)))
    return float(loss + hp.lambda_w * rho + 0.5 * hp.lambda_b * K * b * b)


def reduced_rho_derivative(kind: LossKind, rho: float, b: float, hp: HyperParams) -> float:
    """Partial derivative of reduced_objective in rho at fixed b."""
    _check_kind(kind)
    a, K = hp.feature_scale, hp.K
    pos, neg = _score_levels(rho, hp)
    if kind is LossKind.BCE:
        return float(hp.lambda_w - a / K * (expit(b - pos) + expit(-neg - b)))
    margin = pos + neg  # a rho / (K-1)
    return float(hp.lambda_w - a / (K - 1) * expit(math.log(K - 1) - margin))


@dataclass(frozen=True)
class OptimalPoint:
    """Minimizer (rho*, b*) of the reduced objective."""
    rho: float
    b: float
    objective: float


def _bias_rule(kind: LossKind, hp: HyperParams, ce_bias: float) -> Callable[[float], float]:
    if kind is LossKind.BCE:
        return lambda rho: solve_bias(BiasProblem.from_hyperparams(rho, hp))
    # CE depends on b through the ridge term only
    b = 0.0 if hp.lambda_b > 0 else float(ce_bias)
    return lambda rho: b


def optimal_point(hp: HyperParams, kind: LossKind, ce_bias: float = 0.0) -> OptimalPoint:
    """
    Minimize the reduced objective over (rho, b).

    b is eliminated exactly (bias root for BCE, 0 or `ce_bias` on the CE
    ridge). rho is located on a log grid, refined by golden section and
    polished as the root of the rho-derivative.
    """
    _check_kind(kind)
    bias_of = _bias_rule(kind, hp, ce_bias)

    def profile(rho: float) -> float:
        return reduced_objective(kind, rho, bias_of(rho), hp)

    def slope(rho: float) -> float:
        return reduced_rho_derivative(kind, rho, bias_of(rho), hp)

    if slope(0.0) >= 0.0:
        logger.info("Weight decay dominates: reduced objective minimized at rho=0")
        b0 = bias_of(0.0)
        return OptimalPoint(rho=0.0, b=b0, objective=profile(0.0))

    values = np.array([profile(r) for r in RHO_GRID])
    i = int(np.argmin(values))
    if i == 0 or i == len(RHO_GRID) - 1:
        raise SolverError(f"reduced objective minimum at grid edge rho={RHO_GRID[i]:.3e}")
    lo, mid, hi = RHO_GRID[i - 1], RHO_GRID[i], RHO_GRID[i + 1]

    result = minimize_scalar(profile, bracket=(lo, mid, hi), method="golden",
                             tol=GOLDEN_TOL)
    rho = float(result.x)
    logger.debug(f"Golden section: rho={rho!r} after {result.nit} iterations")

    # Polish on the derivative, which is far better conditioned than the value
    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo < 0.0 < s_hi:
        rho = float(brentq(slope, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                           maxiter=500))
    else:
        logger.warning(f"rho derivative does not bracket on [{lo}, {hi}]; keeping golden result")

    b = bias_of(rho)
    return OptimalPoint(rho=rho, b=b, objective=reduced_objective(kind, rho, b, hp))


# ─────────────────────────────────────────────────────────────────────────────
# BCE lower bound
# ─────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LowerBound:
    """
    Lower bound of the BCE objective at squared classifier norm rho.

    bias_term_defined is False when lambda_b = 0 and the completed-square
    bias term has a nonzero numerator; value is then -inf.
    """
    value: float
    bias_term_defined: bool = True


def lower_bound_constant(c1: float, c2: float, K: int) -> float:
    """Constant C collecting the tangent-line intercepts of the softplus terms."""
    return (c1 / (1.0 + c1) * math.log1p(1.0 / c1)
            + math.log1p(c1) / (1.0 + c1)
            + (K - 1) / (1.0 + c2) * (c2 * math.log1p(1.0 / c2) + math.log1p(c2)))


def equality_constants(rho: float, b: float, hp: HyperParams) -> Tuple[float, float]:
    """(c1, c2) for which the lower bound is tight at the collapsed (rho, b)."""
    pos, neg = _score_levels(rho, hp)
    return math.exp(pos - b), math.exp(b + neg)


def bce_lower_bound(rho: float, c1: float, c2: float, hp: HyperParams) -> LowerBound:
    """Lower bound of the BCE objective over all states with |W|_F^2 = rho."""
    if not (c1 > 0 and c2 > 0):
        raise ConfigError(f"c1 and c2 must be > 0, got {c1}, {c2}")
    if rho < 0:
        raise ConfigError(f"rho must be >= 0, got {rho}")
    K, N = hp.K, hp.N
    coef = hp.lambda_w - (1.0 / (N * (1.0 + c2)) + 1.0 / (N * (1.0 + c1))) \
        * math.sqrt(hp.n * hp.lambda_w / hp.lambda_h)
    numerator = (K - 1) / (1.0 + c2) - 1.0 / (1.0 + c1)
    constant = lower_bound_constant(c1, c2, K)

    if hp.lambda_b > 0:
        bias_term = numerator * numerator / (2.0 * K * hp.lambda_b)
    elif numerator == 0.0:
        bias_term = 0.0
    else:
        logger.warning("lambda_b = 0 with nonzero bias numerator: bound is -inf")
        return LowerBound(value=-math.inf, bias_term_defined=False)

    return LowerBound(value=coef * rho - bias_term + constant)
