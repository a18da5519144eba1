"""
Training package - learning-rate schedules and the optimizer loop.
"""

from .optimizer import (
    AdaptiveMoments,
    GradientDescent,
    HeavyBall,
    Method,
    RunStatus,
    TrainConfig,
    TrainRecord,
    Trajectory,
    Updater,
    create_updater,
    train,
)
from .schedules import Schedule, ScheduleKind, batch_scaled_lr, lr_at

__all__ = [
    "AdaptiveMoments",
    "GradientDescent",
    "HeavyBall",
    "Method",
    "RunStatus",
    "TrainConfig",
    "TrainRecord",
    "Trajectory",
    "Updater",
    "create_updater",
    "train",
    "Schedule",
    "ScheduleKind",
    "batch_scaled_lr",
    "lr_at",
]
