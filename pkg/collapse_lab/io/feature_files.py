"""
Feature and classifier CSV files.

Features file: header `label,f0,...,f{d-1}`, one sample per row, labels
1-based. Classifier file: header `w0,...,w{d-1},b`, one class per row.
Reals are written with 17 significant digits and LF line endings.

Usage:
    export_classifier("classifier.csv", state.W, state.b)
    W, b = load_classifier("classifier.csv")
    H, labels = load_features("features.csv", K=W.shape[0], d=W.shape[1])
"""

import logging
import math
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import FeatureFileError, ShapeError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"


def _write_frame(path: PathLike, frame: pd.DataFrame) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def export_features(path: PathLike, H: np.ndarray, labels: np.ndarray) -> None:
    """Write features (d x N) with 0-based labels as a 1-based CSV."""
    H = np.asarray(H, dtype=np.float64)
    labels = np.asarray(labels)
    if H.ndim != 2 or labels.shape != (H.shape[1],):
        raise ShapeError(f"H {H.shape} does not match {labels.shape} labels")
    frame = pd.DataFrame(H.T, columns=[f"f{j}" for j in range(H.shape[0])])
    frame.insert(0, "label", labels.astype(np.int64) + 1)
    _write_frame(path, frame)
    logger.info(f"Wrote {H.shape[1]} feature rows to {path}")


def export_classifier(path: PathLike, W: np.ndarray, b: np.ndarray) -> None:
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if W.ndim != 2 or b.shape != (W.shape[0],):
        raise ShapeError(f"W {W.shape} does not match b {b.shape}")
    frame = pd.DataFrame(W, columns=[f"w{j}" for j in range(W.shape[1])])
    frame["b"] = b
    _write_frame(path, frame)
    logger.info(f"Wrote {W.shape[0]} classifier rows to {path}")


# ─────────────────────────────────────────────────────────────────────────────
# Readers
# ─────────────────────────────────────────────────────────────────────────────

def _read_rows(path: Path) -> Tuple[List[str], List[Tuple[int, List[str]]]]:
    """Header fields and (line number, fields) for every non-blank row."""
    if not path.exists():
        raise FeatureFileError(path, "file not found")
    header: List[str] = []
    rows: List[Tuple[int, List[str]]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_num, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            fields = [item.strip() for item in line.split(",")]
            if not header:
                header = fields
            else:
                rows.append((line_num, fields))
    if not header:
        raise FeatureFileError(path, "empty file")
    return header, rows


def _reals(path: Path, line_num: int, fields: List[str]) -> List[float]:
    values = []
    for item in fields:
        try:
            value = float(item)
        except ValueError:
            raise FeatureFileError(path, f"not a number: '{item}'", line_num)
        if not math.isfinite(value):
            raise FeatureFileError(path, f"non-finite value: '{item}'", line_num)
        values.append(value)
    return values


def load_classifier(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (W (K x d), b (K))."""
    path = Path(path)
    header, rows = _read_rows(path)
    d = len(header) - 1
    if d < 1 or header != [f"w{j}" for j in range(d)] + ["b"]:
        raise FeatureFileError(path, f"bad classifier header {','.join(header)}", 1)
    if len(rows) < 2:
        raise FeatureFileError(path, f"need at least 2 class rows, got {len(rows)}")

    values = []
    for line_num, fields in rows:
        if len(fields) != d + 1:
            raise FeatureFileError(path, f"expected {d + 1} fields, got {len(fields)}", line_num)
        values.append(_reals(path, line_num, fields))

    table = np.array(values)
    logger.info(f"Loaded classifier K={table.shape[0]} d={d} from {path}")
    return table[:, :d], table[:, d]


def load_features(path: PathLike, K: int, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (H (d x N), 0-based labels (N,)) checked against K and d."""
    path = Path(path)
    header, rows = _read_rows(path)
    expected = ["label"] + [f"f{j}" for j in range(d)]
    if header != expected:
        raise FeatureFileError(
            path, f"header has {len(header) - 1} feature columns, classifier has d={d}", 1
        )
    if not rows:
        raise FeatureFileError(path, "no samples")

    labels, columns = [], []
    for line_num, fields in rows:
        if len(fields) != d + 1:
            raise FeatureFileError(path, f"expected {d + 1} fields, got {len(fields)}", line_num)
        try:
            label = int(fields[0])
        except ValueError:
            raise FeatureFileError(path, f"label is not an integer: '{fields[0]}'", line_num)
        if not 1 <= label <= K:
            raise FeatureFileError(path, f"unknown label {label} (classes are 1..{K})", line_num)
        labels.append(label - 1)
        columns.append(_reals(path, line_num, fields[1:]))

    H = np.array(columns).T
    logger.info(f"Loaded {H.shape[1]} features from {path}")
    return H, np.array(labels, dtype=np.int64)
