"""
Gradient-based training of the layer-peeled objective.

Weight decay stays inside the gradient (coupled), so every method targets
the same fixed points as the regularized objective.

Usage:
    cfg = TrainConfig(method=Method.GD, lr0=0.5, steps=600_000, grad_tol=1e-8)
    trajectory = train(state0, hp, LossKind.BCE, cfg)
    if trajectory.converged:
        ...
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Callable, Dict, List, Optional

import numpy as np

from ..errors import ConfigError
from ..model.core import HyperParams, ModelState, class_major_labels
from ..model.losses import LossKind, loss_and_gradient
from .schedules import Schedule, lr_at

logger = logging.getLogger(__name__)


class Method(Enum):
    GD = "gd"
    MOMENTUM = "momentum"
    ADAM = "adam"

    @classmethod
    def parse(cls, text: str) -> "Method":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ConfigError(f"unknown method '{text}' (expected gd, momentum or adam)")


class RunStatus(Enum):
    COMPLETED = auto()   # ran every step without meeting grad_tol
    CONVERGED = auto()   # gradient inf-norm fell below grad_tol
    DIVERGED = auto()    # non-finite objective; last finite state kept


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings."""

    method: Method = Method.GD
    lr0: float = 0.5
    schedule: Schedule = field(default_factory=Schedule)

    # Step limit and early stop on the full-gradient inf-norm
    steps: int = 600_000
    grad_tol: float = 1e-8

    # None = full batch
    batch_size: Optional[int] = None
    seed: int = 0

    record_every: int = 1000

    # Heavy-ball momentum
    momentum: float = 0.9

    # Adaptive moments
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self, N: int) -> None:
        if not self.lr0 > 0:
            raise ConfigError(f"lr0 must be > 0, got {self.lr0}")
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if not self.grad_tol >= 0:
            raise ConfigError(f"grad_tol must be >= 0, got {self.grad_tol}")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every}")
        if self.batch_size is not None and not 1 <= self.batch_size <= N:
            raise ConfigError(f"batch_size must be in [1, {N}], got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0 and self.eps > 0):
            raise ConfigError("adaptive moments need beta1, beta2 in [0, 1) and eps > 0")
        self.schedule.validate()


@dataclass(frozen=True)
class TrainRecord:
    step: int
    objective: float
    grad_inf_norm: float
    metrics: Optional[object] = None


@dataclass
class Trajectory:
    records: List[TrainRecord]
    final_state: ModelState
    status: RunStatus
    steps_taken: int

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED

    @property
    def final_record(self) -> TrainRecord:
        return self.records[-1]


# ─────────────────────────────────────────────────────────────────────────────
# Update rules
# ─────────────────────────────────────────────────────────────────────────────

Params = Dict[str, np.ndarray]


class Updater(ABC):
    """In-place parameter update given gradients and the current rate."""

    @abstractmethod
    def step(self, params: Params, grads: Params, lr: float) -> None:
        ...


class GradientDescent(Updater):
    def step(self, params: Params, grads: Params, lr: float) -> None:
        for k in params:
            params[k] -= lr * grads[k]


class HeavyBall(Updater):
    def __init__(self, beta: float):
        self.beta = beta
        self.velocity: Params = {}

    def step(self, params: Params, grads: Params, lr: float) -> None:
        for k in params:
            if k not in self.velocity:
                self.velocity[k] = np.zeros_like(params[k])
            v = self.velocity[k]
            v *= self.beta
            v += grads[k]
            params[k] -= lr * v


class AdaptiveMoments(Updater):
    """Bias-corrected first/second moment estimates (Adam)."""

    def __init__(self, beta1: float, beta2: float, eps: float):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: Params = {}
        self.v: Params = {}
        self.t = 0

    def step(self, params: Params, grads: Params, lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = lr / bc1

        for k in params:
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])

            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)

            denom = np.sqrt(self.v[k] / bc2) + self.eps
            params[k] -= step_size * self.m[k] / denom


def create_updater(cfg: TrainConfig) -> Updater:
    if cfg.method is Method.GD:
        return GradientDescent()
    if cfg.method is Method.MOMENTUM:
        return HeavyBall(cfg.momentum)
    return AdaptiveMoments(cfg.beta1, cfg.beta2, cfg.eps)


# ─────────────────────────────────────────────────────────────────────────────
# Training loop
# ─────────────────────────────────────────────────────────────────────────────

def _inf_norm(grads: Params) -> float:
    return float(max(np.abs(g).max(initial=0.0) for g in grads.values()))


def train(
    state0: ModelState,
    hp: HyperParams,
    kind: LossKind,
    cfg: TrainConfig,
    evaluate: Optional[Callable[[ModelState], object]] = None,
    metrics_every: int = 0,
) -> Trajectory:
    """
    Run `cfg.steps` updates from state0.

    Records are taken every `record_every` steps and at the final state.
    `evaluate` (if given) is attached to records whose step is a multiple
    of `metrics_every` and to the final record.
    """
    cfg.validate(hp.N)
    kind.check_classes(hp.K)
    if not state0.matches(hp):
        raise ConfigError(
            f"state is K={state0.K} d={state0.d} N={state0.N}, expected "
            f"K={hp.K} d={hp.d} N={hp.N}"
        )

    labels = class_major_labels(hp.K, hp.n)
    params: Params = {"W": state0.W.copy(), "H": state0.H.copy(), "b": state0.b.copy()}
    rng = np.random.default_rng(cfg.seed)
    updater = create_updater(cfg)
    full_batch = cfg.batch_size is None or cfg.batch_size == hp.N

    records: List[TrainRecord] = []

    def full_eval():
        value, dW, dH, db = loss_and_gradient(params["W"], params["H"], params["b"],
                                              hp, kind, labels)
        return value, {"W": dW, "H": dH, "b": db}

    def snapshot() -> ModelState:
        return ModelState(W=params["W"], H=params["H"], b=params["b"])

    def record(step: int, value: float, gnorm: float, final: bool = False) -> None:
        metrics = None
        if evaluate is not None and (final or (metrics_every > 0 and step % metrics_every == 0)):
            metrics = evaluate(snapshot())
        records.append(TrainRecord(step, value, gnorm, metrics))
        logger.debug(f"step {step}: objective={value:.12g} grad_inf={gnorm:.3e}")

    logger.info(
        f"Training {kind.value} K={hp.K} d={hp.d} n={hp.n} with {cfg.method.value} "
        f"lr0={cfg.lr0} for up to {cfg.steps} steps"
    )

    status = RunStatus.COMPLETED
    last_finite = {k: v.copy() for k, v in params.items()}
    t = 0
    while t < cfg.steps:
        due = t % cfg.record_every == 0
        value, grads, gnorm = None, None, None
        if full_batch or due:
            value, grads = full_eval()
            gnorm = _inf_norm(grads)
            if not (math.isfinite(value) and math.isfinite(gnorm)):
                status = RunStatus.DIVERGED
                records.append(TrainRecord(t, value, gnorm))
                logger.warning(f"Non-finite objective at step {t}; keeping step {t - 1} state")
                params = last_finite
                break
            if gnorm < cfg.grad_tol:
                status = RunStatus.CONVERGED
                record(t, value, gnorm, final=True)
                break
            if due:
                record(t, value, gnorm)

        if not full_batch:
            columns = rng.choice(hp.N, size=cfg.batch_size, replace=False)
            _, dW, dH, db = loss_and_gradient(params["W"], params["H"], params["b"],
                                              hp, kind, labels, columns=columns)
            grads = {"W": dW, "H": dH, "b": db}

        last_finite = {k: v.copy() for k, v in params.items()}
        updater.step(params, grads, lr_at(cfg.schedule, cfg.lr0, t))
        t += 1

        # minibatch steps skip the full objective, so watch the parameters
        if not full_batch and not all(np.isfinite(v).all() for v in params.values()):
            status = RunStatus.DIVERGED
            records.append(TrainRecord(t, math.nan, math.nan))
            logger.warning(f"Non-finite parameters at step {t}; keeping step {t - 1} state")
            params = last_finite
            break

    if status is RunStatus.COMPLETED:
        value, grads = full_eval()
        gnorm = _inf_norm(grads)
        if not (math.isfinite(value) and math.isfinite(gnorm)):
            status = RunStatus.DIVERGED
            records.append(TrainRecord(t, value, gnorm))
            logger.warning(f"Non-finite objective at step {t}; keeping step {t - 1} state")
            params = last_finite
        else:
            if gnorm < cfg.grad_tol:
                status = RunStatus.CONVERGED
            record(t, value, gnorm, final=True)

    final_state = snapshot()
    logger.info(f"Training finished: {status.name} after {t} steps")
    return Trajectory(records=records, final_state=final_state, status=status, steps_taken=t)
