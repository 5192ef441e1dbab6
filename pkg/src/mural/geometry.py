"""
Axis-aligned box arithmetic.

Boxes are stored as (x, y, w, h) with (x, y) the top-left corner. Intervals
are closed, so a box whose edge touches a region's edge is inside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinates: {vals}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box origin must be non-negative, got ({self.x}, {self.y})")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box width and height must be positive, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, values) -> "BBox":
        x, y, w, h = values
        return cls(float(x), float(y), float(w), float(h))

    @classmethod
    def from_xyxy(cls, x1: float, y1: float, x2: float, y2: float) -> "BBox":
        return cls(x1, y1, x2 - x1, y2 - y1)


def intersection_area(a: BBox, b: BBox) -> float:
    iw = max(0.0, min(a.x2, b.x2) - max(a.x, b.x))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y, b.y))
    return iw * ih


def iou(a: BBox, b: BBox) -> float:
    inter = intersection_area(a, b)
    if inter <= 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def coverage_fraction(box: BBox, region: BBox) -> float:
    """Fraction of ``box``'s area that falls inside ``region``."""
    return intersection_area(box, region) / box.area


def contains(region: BBox, box: BBox) -> bool:
    return (
        box.x >= region.x
        and box.y >= region.y
        and box.x2 <= region.x2
        and box.y2 <= region.y2
    )


def rescale_box(box: BBox, factor: float) -> BBox:
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return BBox(box.x * factor, box.y * factor, box.w * factor, box.h * factor)


def clip_box(box: BBox, region: BBox) -> Optional[BBox]:
    """
    Crop ``box`` to ``region``.

    Returns:
        The overlap rectangle in region-local coordinates (origin at the
        region's top-left corner), or None when the overlap has zero area.
    """
    x1 = max(box.x, region.x)
    y1 = max(box.y, region.y)
    x2 = min(box.x2, region.x2)
    y2 = min(box.y2, region.y2)
    if x2 <= x1 or y2 <= y1:
        return None
    return BBox(x1 - region.x, y1 - region.y, x2 - x1, y2 - y1)


def translate(box: BBox, dx: float, dy: float) -> BBox:
    return BBox(box.x + dx, box.y + dy, box.w, box.h)

