"""
Experiment package - configured runs, sweeps and feature audits.
"""

from .runner import (
    RunReport,
    export_state,
    ingest_features,
    load_run_report,
    record_row,
    run_experiment,
    run_sweep,
    sweep_configs,
)

__all__ = [
    "RunReport",
    "export_state",
    "ingest_features",
    "load_run_report",
    "record_row",
    "run_experiment",
    "run_sweep",
    "sweep_configs",
]
