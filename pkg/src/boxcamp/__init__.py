"""boxcamp: two-stage bounding-box annotation campaigns.

Split a dataset by video progression, annotate fold 1 from scratch, import
an external detector's proposals for fold 2, correct them, and measure or
minimize the total manual workload.
"""

from boxcamp.geometry import BoundingBox, LabeledBox, area, iou, matches_at
from boxcamp.matching import MatchConfig, MatchReport, MatchResult, match_image, report
from boxcamp.workload import (
    TimingModel,
    WorkloadEstimate,
    estimate,
    estimate_additions,
    estimate_removals,
    fit_timing,
    savings_vs_manual,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "LabeledBox",
    "MatchConfig",
    "MatchReport",
    "MatchResult",
    "TimingModel",
    "WorkloadEstimate",
    "area",
    "estimate",
    "estimate_additions",
    "estimate_removals",
    "fit_timing",
    "iou",
    "match_image",
    "matches_at",
    "report",
    "savings_vs_manual",
]
