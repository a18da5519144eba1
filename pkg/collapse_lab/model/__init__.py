"""
Model package - the layer-peeled free-variable model and its losses.

Key components:
- core: HyperParams, ModelState, InitConfig, scores and initialization
- losses: CE / BCE / naive-BCE losses, objective and analytic gradient
"""

from .core import (
    HyperParams,
    InitConfig,
    ModelState,
    check_dimensions,
    class_major_labels,
    decision_scores,
    init_state,
    scores,
    validate_labels,
)
from .losses import (
    Gradient,
    LossKind,
    grad_objective,
    loss_and_gradient,
    loss_per_sample,
    loss_value,
    objective,
    per_score_gradient,
    softplus,
)

__all__ = [
    "HyperParams",
    "InitConfig",
    "ModelState",
    "check_dimensions",
    "class_major_labels",
    "decision_scores",
    "init_state",
    "scores",
    "validate_labels",
    "Gradient",
    "LossKind",
    "grad_objective",
    "loss_and_gradient",
    "loss_per_sample",
    "loss_value",
    "objective",
    "per_score_gradient",
    "softplus",
]
