"""
Experiment runner.

Trains one configuration (or every value of a one-variable sweep), writes
`trajectory.csv` and `report.json` per run and a `summary.csv` per sweep.

Usage:
    cfg = load_config("configs/bce.cfg")
    report = run_experiment(cfg)
    reports = run_sweep(cfg_with_sweep)
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..config import ExperimentConfig, config_to_dict
from ..errors import ConfigError
from ..io.artifacts import (
    TRAJECTORY_COLUMNS,
    ensure_writable,
    load_json,
    save_json,
    write_table,
    write_trajectory_csv,
)
from ..io.feature_files import export_classifier, export_features, load_classifier, load_features
from ..metrics.report import REPORT_COLUMNS, MetricsReport, compute_report, evaluate_state
from ..metrics.scores import DEFAULT_THRESHOLDS
from ..model.core import ModelState, class_major_labels, init_state
from ..training.optimizer import TrainRecord, Trajectory, train

logger = logging.getLogger(__name__)

TRAJECTORY_FILE = "trajectory.csv"
REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.csv"
FEATURES_FILE = "features.csv"
CLASSIFIER_FILE = "classifier.csv"

SUMMARY_COLUMNS = ["index", "value", "status", "steps"] + TRAJECTORY_COLUMNS[1:]


@dataclass
class RunReport:
    """Outcome of one training run."""
    config: Dict[str, Any]
    final_metrics: MetricsReport
    status: str
    converged: bool
    steps: int
    final_objective: float
    final_grad_inf_norm: float
    wall_time: float
    seed: int
    trajectory: List[Dict[str, Any]] = field(default_factory=list)
    final_state: Optional[ModelState] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "final_metrics": self.final_metrics.to_dict(),
            "status": self.status,
            "converged": self.converged,
            "steps": self.steps,
            "final_objective": self.final_objective,
            "final_grad_inf_norm": self.final_grad_inf_norm,
            "wall_time": self.wall_time,
            "seed": self.seed,
            "trajectory": self.trajectory,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunReport":
        data = dict(data)
        data["final_metrics"] = MetricsReport.from_dict(data["final_metrics"])
        return cls(**data)


def record_row(record: TrainRecord) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "step": record.step,
        "objective": record.objective,
        "grad_inf_norm": record.grad_inf_norm,
    }
    if record.metrics is not None:
        row.update(record.metrics.as_row())
    else:
        row.update({name: None for name in REPORT_COLUMNS})
    return row


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunReport:
    """
    Train one configuration and write its artifacts.

    The output directory is checked before training starts.
    """
    if cfg.sweep is not None:
        raise ConfigError("config describes a sweep; use run_sweep")
    if write:
        ensure_writable(cfg.output_dir)

    hp = cfg.hp

    def evaluate(state: ModelState) -> MetricsReport:
        return evaluate_state(state, hp, n_thresholds=cfg.n_thresholds, centered=cfg.centered)

    started = time.perf_counter()
    state0 = init_state(hp, cfg.init)
    trajectory: Trajectory = train(state0, hp, cfg.loss, cfg.train,
                                   evaluate=evaluate, metrics_every=cfg.metrics_every)
    wall_time = time.perf_counter() - started

    last = trajectory.final_record
    final_metrics = last.metrics if last.metrics is not None else evaluate(trajectory.final_state)

    report = RunReport(
        config=config_to_dict(cfg),
        final_metrics=final_metrics,
        status=trajectory.status.name.lower(),
        converged=trajectory.converged,
        steps=trajectory.steps_taken,
        final_objective=last.objective,
        final_grad_inf_norm=last.grad_inf_norm,
        wall_time=wall_time,
        seed=cfg.init.seed,
        trajectory=[record_row(r) for r in trajectory.records],
        final_state=trajectory.final_state,
    )

    if write:
        write_trajectory_csv(Path(cfg.output_dir) / TRAJECTORY_FILE, report.trajectory)
        save_json(Path(cfg.output_dir) / REPORT_FILE, report.to_dict())

    logger.info(
        f"Run {cfg.output_dir}: {report.status} after {report.steps} steps, "
        f"nc1={final_metrics.nc1:.3e} accuracy={final_metrics.accuracy:.1f}"
    )
    return report


def load_run_report(directory: Union[str, Path]) -> RunReport:
    return RunReport.from_dict(load_json(Path(directory) / REPORT_FILE))


# ─────────────────────────────────────────────────────────────────────────────
# Sweeps
# ─────────────────────────────────────────────────────────────────────────────

def sweep_configs(cfg: ExperimentConfig) -> List[ExperimentConfig]:
    """One config per sweep value, each with its own subdirectory."""
    if cfg.sweep is None:
        raise ConfigError("config has no sweep")
    root = Path(cfg.output_dir)
    variable = cfg.sweep.variable
    return [
        replace(cfg.with_sweep_value(value), output_dir=root / f"{variable}_{index:02d}")
        for index, value in enumerate(cfg.sweep.values)
    ]


def run_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[RunReport]:
    """
    Run every sweep value, possibly on several threads. Reports and the
    summary follow the order of the sweep values.
    """
    configs = sweep_configs(cfg)
    ensure_writable(cfg.output_dir)
    for run_cfg in configs:
        ensure_writable(run_cfg.output_dir)

    workers = workers or cfg.sweep.workers
    logger.info(f"Sweeping {cfg.sweep.variable} over {len(configs)} values on {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(run_experiment, configs))

    rows = []
    for index, (value, report) in enumerate(zip(cfg.sweep.values, reports)):
        row: Dict[str, Any] = {
            "index": index,
            "value": "full" if value is None else value,
            "status": report.status,
            "steps": report.steps,
            "objective": report.final_objective,
            "grad_inf_norm": report.final_grad_inf_norm,
        }
        row.update(report.final_metrics.as_row())
        rows.append(row)
    write_table(Path(cfg.output_dir) / SUMMARY_FILE, rows, SUMMARY_COLUMNS)
    return reports


# ─────────────────────────────────────────────────────────────────────────────
# Feature audits
# ─────────────────────────────────────────────────────────────────────────────

def export_state(
    state: ModelState,
    directory: Union[str, Path],
    labels: Optional[np.ndarray] = None,
    n: Optional[int] = None,
) -> Path:
    """Write features.csv and classifier.csv for a state."""
    directory = ensure_writable(directory)
    if labels is None:
        if n is None:
            raise ConfigError("export_state needs labels or the per-class count n")
        labels = class_major_labels(state.K, n)
    export_features(directory / FEATURES_FILE, state.H, labels)
    export_classifier(directory / CLASSIFIER_FILE, state.W, state.b)
    return directory


def ingest_features(
    features_path: Union[str, Path],
    classifier_path: Union[str, Path],
    n_for_alpha: float,
    lambda_w: float = 5e-4,
    lambda_h: float = 5e-4,
    lambda_b: float = 5e-4,
    n_thresholds: int = DEFAULT_THRESHOLDS,
    centered: bool = True,
) -> MetricsReport:
    """Metrics of an externally produced (H, W, b)."""
    W, b = load_classifier(classifier_path)
    H, labels = load_features(features_path, K=W.shape[0], d=W.shape[1])
    return compute_report(
        W, H, b, labels,
        n_for_alpha=n_for_alpha,
        lambda_w=lambda_w,
        lambda_h=lambda_h,
        lambda_b=lambda_b,
        n_thresholds=n_thresholds,
        centered=centered,
    )
