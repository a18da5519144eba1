"""
Experiment configuration.

A run is described by one ExperimentConfig, loaded from a flat text file
of dotted `key = value` lines (grammar in docs/CONFIG_FORMAT.md):

    # BCE on the desk-scale instance
    hp.K = 4
    hp.d = 8
    hp.n = 10
    loss = bce
    train.lr0 = 0.5
    output_dir = runs/bce
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

from .errors import ConfigError
from .model.core import HyperParams, InitConfig
from .model.losses import LossKind
from .training.optimizer import Method, TrainConfig
from .training.schedules import Schedule, ScheduleKind, batch_scaled_lr

logger = logging.getLogger(__name__)

SWEEP_VARIABLES = ("bias_mean_offset", "lambda_b", "batch_size")


@dataclass(frozen=True)
class SweepSpec:
    """
    One-variable sweep; runs may execute on `workers` threads.

    With lr_reference set, a batch_size sweep rescales lr0 to
    lr0 * batch / lr_reference for each value (full batch counts as N).
    """
    variable: str
    values: Tuple[Any, ...]
    workers: int = 1
    lr_reference: Optional[int] = None

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep variable must be one of {', '.join(SWEEP_VARIABLES)}, got '{self.variable}'"
            )
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if self.workers < 1:
            raise ConfigError(f"sweep workers must be >= 1, got {self.workers}")
        if self.lr_reference is not None:
            if self.variable != "batch_size":
                raise ConfigError("sweep.lr_reference only applies to a batch_size sweep")
            if self.lr_reference < 1:
                raise ConfigError(f"sweep.lr_reference must be >= 1, got {self.lr_reference}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment (or sweep) needs."""

    # ─────────────────────────────────────────────────────────────────────────
    # Problem
    # ─────────────────────────────────────────────────────────────────────────

    hp: HyperParams = field(default_factory=lambda: HyperParams(K=4, d=8, n=10))
    init: InitConfig = field(default_factory=InitConfig)
    loss: LossKind = LossKind.BCE

    # ─────────────────────────────────────────────────────────────────────────
    # Optimization
    # ─────────────────────────────────────────────────────────────────────────

    train: TrainConfig = field(default_factory=TrainConfig)

    # ─────────────────────────────────────────────────────────────────────────
    # Metrics and output
    # ─────────────────────────────────────────────────────────────────────────

    # Attach a full metrics report every this many steps (0 = final only)
    metrics_every: int = 0

    # Thresholds swept by uniform accuracy
    n_thresholds: int = 200

    # Center classifier rows in NC2
    centered: bool = True

    output_dir: Path = Path("runs/default")

    sweep: Optional[SweepSpec] = None

    def __post_init__(self):
        if self.metrics_every < 0:
            raise ConfigError(f"metrics.every must be >= 0, got {self.metrics_every}")
        if self.n_thresholds < 1:
            raise ConfigError(f"metrics.n_thresholds must be >= 1, got {self.n_thresholds}")
        self.loss.check_classes(self.hp.K)
        self.train.validate(self.hp.N)
        if self.sweep is not None:
            for value in self.sweep.values:
                self.with_sweep_value(value)

    def with_sweep_value(self, value: Any) -> "ExperimentConfig":
        """Copy with the sweep variable set to `value`, without the sweep."""
        if self.sweep is None:
            raise ConfigError("config has no sweep")
        variable = self.sweep.variable
        if variable in ("bias_mean_offset", "lambda_b"):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{variable} values must be finite reals, got {value!r}")
            if variable == "lambda_b":
                return replace(self, hp=self.hp.with_lambda_b(float(value)), sweep=None)
            return replace(self, init=self.init.with_offset(float(value)), sweep=None)
        if value is not None and not isinstance(value, int):
            raise ConfigError(f"batch_size values must be integers or 'full', got {value!r}")
        train = replace(self.train, batch_size=value)
        if self.sweep.lr_reference is not None:
            batch = self.hp.N if value is None else value
            lr0 = batch_scaled_lr(self.train.lr0, batch, self.sweep.lr_reference)
            train = replace(train, lr0=lr0)
        return replace(self, train=train, sweep=None)


# ─────────────────────────────────────────────────────────────────────────────
# Value parsers
# ─────────────────────────────────────────────────────────────────────────────

def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


def _batch(text: str) -> Optional[int]:
    return None if text.lower() == "full" else int(text)


def _sweep_values(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


# key -> (group, field, parser)
KEYS: Dict[str, Tuple[str, str, Callable[[str], Any]]] = {
    "hp.K": ("hp", "K", _int),
    "hp.d": ("hp", "d", _int),
    "hp.n": ("hp", "n", _int),
    "hp.lambda_w": ("hp", "lambda_w", _float),
    "hp.lambda_h": ("hp", "lambda_h", _float),
    "hp.lambda_b": ("hp", "lambda_b", _float),
    "init.seed": ("init", "seed", _int),
    "init.bias_mean_offset": ("init", "bias_mean_offset", _float),
    "loss": ("top", "loss", LossKind.parse),
    "train.method": ("train", "method", Method.parse),
    "train.lr0": ("train", "lr0", _float),
    "train.schedule": ("schedule", "kind", ScheduleKind.parse),
    "train.step_period": ("schedule", "period", _int),
    "train.step_gamma": ("schedule", "gamma", _float),
    "train.cosine_total": ("schedule", "total", _int),
    "train.cosine_lr_min": ("schedule", "lr_min", _float),
    "train.steps": ("train", "steps", _int),
    "train.batch_size": ("train", "batch_size", _batch),
    "train.grad_tol": ("train", "grad_tol", _float),
    "train.seed": ("train", "seed", _int),
    "train.record_every": ("train", "record_every", _int),
    "train.momentum": ("train", "momentum", _float),
    "train.beta1": ("train", "beta1", _float),
    "train.beta2": ("train", "beta2", _float),
    "train.eps": ("train", "eps", _float),
    "metrics.every": ("top", "metrics_every", _int),
    "metrics.n_thresholds": ("top", "n_thresholds", _int),
    "metrics.centered": ("top", "centered", _bool),
    "output_dir": ("top", "output_dir", Path),
    "sweep.variable": ("sweep", "variable", str),
    "sweep.values": ("sweep", "values", _sweep_values),
    "sweep.workers": ("sweep", "workers", _int),
    "sweep.lr_reference": ("sweep", "lr_reference", _int),
}


def _typed_sweep_values(variable: str, raw: Tuple[str, ...]) -> Tuple[Any, ...]:
    parse = _batch if variable == "batch_size" else _float
    return tuple(parse(item) for item in raw)


def parse_config_text(text: str, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """
    Parse config text. Relative output_dir values are resolved against
    base_dir when given.
    """
    groups: Dict[str, Dict[str, Any]] = {
        g: {} for g in ("hp", "init", "top", "train", "schedule", "sweep")
    }
    seen: Dict[str, int] = {}

    for line_num, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{line}'", line_num)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key '{key}'", line_num)
        if key in seen:
            raise ConfigError(f"duplicate key '{key}' (first on line {seen[key]})", line_num)
        if not value:
            raise ConfigError(f"missing value for '{key}'", line_num)
        seen[key] = line_num

        group, name, parser = KEYS[key]
        try:
            groups[group][name] = parser(value)
        except ConfigError as e:
            raise ConfigError(str(e), line_num) from e
        except ValueError as e:
            raise ConfigError(f"bad value for '{key}': {e}", line_num) from e

    try:
        return _build(groups, base_dir)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def _build(groups: Dict[str, Dict[str, Any]], base_dir: Optional[Path]) -> ExperimentConfig:
    defaults = ExperimentConfig.__dataclass_fields__
    hp_defaults = asdict(defaults["hp"].default_factory())
    hp = HyperParams(**{**hp_defaults, **groups["hp"]})
    init = InitConfig(**groups["init"])
    schedule = Schedule(**groups["schedule"])
    train_cfg = TrainConfig(schedule=schedule, **groups["train"])

    sweep = None
    if groups["sweep"]:
        raw = dict(groups["sweep"])
        if "variable" not in raw or "values" not in raw:
            raise ConfigError("sweep needs both sweep.variable and sweep.values")
        try:
            raw["values"] = _typed_sweep_values(raw["variable"], raw["values"])
        except ValueError as e:
            raise ConfigError(f"bad sweep value: {e}") from e
        sweep = SweepSpec(**raw)

    top = dict(groups["top"])
    if base_dir is not None and "output_dir" in top and not top["output_dir"].is_absolute():
        top["output_dir"] = base_dir / top["output_dir"]

    return ExperimentConfig(hp=hp, init=init, train=train_cfg, sweep=sweep, **top)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Load a config file; output_dir stays relative to the working directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    cfg = parse_config_text(text)
    logger.info(f"Loaded config from {path}")
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    """JSON-ready echo of a config."""

    def plain(value: Any) -> Any:
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, Path):
            return str(value)
        if isinstance(value, dict):
            return {k: plain(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [plain(v) for v in value]
        return value

    return plain(asdict(cfg))
