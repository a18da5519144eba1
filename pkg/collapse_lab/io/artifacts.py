"""
Run artifacts: trajectory and summary CSVs, JSON reports.

CSV files use a header row, comma separators, LF line endings and reals
with 17 significant digits, so identical runs give byte-identical files.
JSON reports store reals with Python's shortest round-trip repr.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd

from ..errors import ConfigError
from ..metrics.report import REPORT_COLUMNS
from .feature_files import FLOAT_FORMAT

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRAJECTORY_COLUMNS = ["step", "objective", "grad_inf_norm"] + REPORT_COLUMNS

# Set on every row; NaN is written as "nan", not blank
ALWAYS_SET_COLUMNS = ("objective", "grad_inf_norm")


def ensure_writable(directory: PathLike) -> Path:
    """Create `directory` and prove it accepts files; ConfigError otherwise."""
    directory = Path(directory)
    marker = directory / ".write_check"
    try:
        directory.mkdir(parents=True, exist_ok=True)
        marker.write_text("", encoding="utf-8")
        marker.unlink()
    except OSError as e:
        raise ConfigError(f"output directory {directory} is not writable: {e}") from e
    return directory


def _always_set_cell(value: float) -> str:
    return "nan" if pd.isna(value) else FLOAT_FORMAT % value


def write_table(path: PathLike, rows: Sequence[Dict[str, Any]], columns: List[str]) -> None:
    frame = pd.DataFrame(list(rows), columns=columns)
    for name in ALWAYS_SET_COLUMNS:
        if name in frame:
            frame[name] = frame[name].map(_always_set_cell)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")


def write_trajectory_csv(path: PathLike, rows: Sequence[Dict[str, Any]]) -> None:
    """Rows keyed by TRAJECTORY_COLUMNS; missing metrics are left blank."""
    write_table(path, rows, TRAJECTORY_COLUMNS)


def save_json(path: PathLike, data: Dict[str, Any]) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
    logger.info(f"Saved report to {path}")


def load_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read report {path}: {e}") from e
