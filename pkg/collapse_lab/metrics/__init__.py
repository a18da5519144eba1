"""
Metrics package - collapse, accuracy, feature and score measurements.

Key components:
- collapse: NC1/NC2/NC3, nearest-class-mean agreement, norm coupling
- scores: accuracy, uniform accuracy, score statistics, ideal conditions
- features: compactness and distinctiveness
- report: MetricsReport and its builders
"""

from .collapse import NCMetrics, class_means, nc1, nc4_agreement, nc_metrics, norm_coupling_residual
from .features import FeatureProperties, feature_properties
from .report import REPORT_COLUMNS, MetricsReport, compute_report, evaluate_state
from .scores import (
    DEFAULT_THRESHOLDS,
    ScoreConditions,
    ScoreStats,
    accuracy,
    bias_separates,
    ideal_score_conditions,
    score_stats,
    split_scores,
    uniform_accuracy,
)

__all__ = [
    "NCMetrics",
    "class_means",
    "nc1",
    "nc4_agreement",
    "nc_metrics",
    "norm_coupling_residual",
    "FeatureProperties",
    "feature_properties",
    "REPORT_COLUMNS",
    "MetricsReport",
    "compute_report",
    "evaluate_state",
    "DEFAULT_THRESHOLDS",
    "ScoreConditions",
    "ScoreStats",
    "accuracy",
    "bias_separates",
    "ideal_score_conditions",
    "score_stats",
    "split_scores",
    "uniform_accuracy",
]
