"""Axis-aligned box arithmetic and the IoU match predicate.

Boxes are stored as (x, y, w, h) with real-valued pixel coordinates, x/y
being the top-left corner. Corner-coordinate sources (VOC XML) are converted
at parse time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from boxcamp.errors import ValidationError

__all__ = ["BoundingBox", "LabeledBox", "area", "iou", "matches_at"]


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValidationError(f"box field {name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ValidationError(f"box field {name} must be finite, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(
                f"degenerate box: w={self.w}, h={self.h} (both must be > 0)"
            )

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def as_xywh(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class LabeledBox:
    """A box with a category and, for detector output, a confidence score.

    Ground-truth boxes carry ``score=None``; detection boxes carry a score
    in [0, 1].
    """

    box: BoundingBox
    category_id: int
    score: float | None = None

    def __post_init__(self):
        if not isinstance(self.category_id, int) or isinstance(self.category_id, bool):
            raise ValidationError(f"category_id must be an int, got {self.category_id!r}")
        if self.category_id < 1:
            raise ValidationError(f"category_id must be >= 1, got {self.category_id}")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValidationError(f"score must lie in [0, 1], got {self.score}")


def area(b: BoundingBox) -> float:
    """Area of the box in square pixels; strictly positive by construction."""
    return b.w * b.h


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint, 1 when equal.

    All widths here derive from the same corner values, so the result stays
    in [0, 1] exactly and iou(a, a) == 1.0 despite float rounding.
    """
    ax2, ay2, bx2, by2 = a.x2, a.y2, b.x2, b.y2
    iw = min(ax2, bx2) - max(a.x, b.x)
    ih = min(ay2, by2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (ax2 - a.x) * (ay2 - a.y)
    area_b = (bx2 - b.x) * (by2 - b.y)
    union = area_a + area_b - inter
    return inter / union


def matches_at(a: BoundingBox, b: BoundingBox, tau: float) -> bool:
    """True iff the two boxes overlap at IoU >= tau.

    The boundary counts as a match: a pair needs no correction exactly when
    its overlap reaches the threshold.
    """
    if not 0.0 < tau <= 1.0:
        raise ValidationError(f"tau must lie in (0, 1], got {tau}")
    return iou(a, b) >= tau
