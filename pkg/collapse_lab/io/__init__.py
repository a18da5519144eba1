"""
IO package - file formats read and written by the lab.

Key components:
- feature_files: feature and classifier CSVs for auditing external states
- artifacts: trajectory/summary CSVs and JSON reports of runs
"""

from .artifacts import (
    TRAJECTORY_COLUMNS,
    ensure_writable,
    load_json,
    save_json,
    write_table,
    write_trajectory_csv,
)
from .feature_files import export_classifier, export_features, load_classifier, load_features

__all__ = [
    "TRAJECTORY_COLUMNS",
    "ensure_writable",
    "load_json",
    "save_json",
    "write_table",
    "write_trajectory_csv",
    "export_classifier",
    "export_features",
    "load_classifier",
    "load_features",
]
