"""
Geometry package - closed-form structure of the collapsed minimizers.

Key components:
- bias: the BCE bias equation, its root and the separation condition
- etf: simplex ETF construction, analytic minimizers, reduced objective,
  the (rho*, b*) oracle and the BCE lower bound
"""

from .bias import (
    BiasProblem,
    alpha_grid,
    alpha_residual,
    beta1,
    beta2,
    bracket,
    separation_holds,
    solve_bias,
)
from .etf import (
    EtfSpec,
    LowerBound,
    OptimalPoint,
    analytic_minimizer,
    bce_lower_bound,
    equality_constants,
    lower_bound_constant,
    optimal_point,
    reduced_objective,
    reduced_rho_derivative,
    simplex_etf,
)

__all__ = [
    "BiasProblem",
    "alpha_grid",
    "alpha_residual",
    "beta1",
    "beta2",
    "bracket",
    "separation_holds",
    "solve_bias",
    "EtfSpec",
    "LowerBound",
    "OptimalPoint",
    "analytic_minimizer",
    "bce_lower_bound",
    "equality_constants",
    "lower_bound_constant",
    "optimal_point",
    "reduced_objective",
    "reduced_rho_derivative",
    "simplex_etf",
]
