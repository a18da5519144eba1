"""
Learning-rate schedules.

Usage:
    schedule = Schedule(kind=ScheduleKind.STEP, period=30, gamma=0.1)
    lr = lr_at(schedule, 0.01, t=45)   # 0.001
"""

import math
from dataclasses import dataclass
from enum import Enum

from ..errors import ConfigError


class ScheduleKind(Enum):
    CONSTANT = "constant"
    STEP = "step"
    COSINE = "cosine"

    @classmethod
    def parse(cls, text: str) -> "ScheduleKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ConfigError(f"unknown schedule '{text}' (expected constant, step or cosine)")


@dataclass(frozen=True)
class Schedule:
    """Schedule shape; only the fields of `kind` are used."""
    kind: ScheduleKind = ScheduleKind.CONSTANT

    # Step decay: multiply by gamma every `period` steps
    period: int = 30
    gamma: float = 0.1

    # Cosine annealing from lr0 to lr_min over `total` steps
    total: int = 100
    lr_min: float = 0.0

    def validate(self) -> None:
        if self.kind is ScheduleKind.STEP:
            if self.period < 1:
                raise ConfigError(f"step period must be >= 1, got {self.period}")
            if not 0.0 < self.gamma < 1.0:
                raise ConfigError(f"step gamma must be in (0, 1), got {self.gamma}")
        elif self.kind is ScheduleKind.COSINE:
            if self.total < 1:
                raise ConfigError(f"cosine total must be >= 1, got {self.total}")
            if self.lr_min < 0:
                raise ConfigError(f"cosine lr_min must be >= 0, got {self.lr_min}")


def lr_at(schedule: Schedule, lr0: float, t: int) -> float:
    """Learning rate at step t; cosine stays at lr_min after `total`."""
    if t < 0:
        raise ConfigError(f"step must be >= 0, got {t}")
    if schedule.kind is ScheduleKind.CONSTANT:
        return lr0
    if schedule.kind is ScheduleKind.STEP:
        return lr0 * schedule.gamma ** (t // schedule.period)
    if t >= schedule.total:
        return schedule.lr_min
    progress = math.cos(math.pi * t / schedule.total)
    return schedule.lr_min + (lr0 - schedule.lr_min) * (1.0 + progress) / 2.0


def batch_scaled_lr(lr0: float, batch_size: int, reference: int = 128) -> float:
    """Linear scaling rule: lr0 * batch_size / reference."""
    if batch_size < 1 or reference < 1:
        raise ConfigError("batch_size and reference must be >= 1")
    return lr0 * batch_size / reference
