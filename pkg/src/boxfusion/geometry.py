"""Axis-aligned bounding boxes in corner format."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Box:
    """Corner-format box ``(xmin, ymin, xmax, ymax)`` with continuous coordinates."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmin <= self.xmax and self.ymin <= self.ymax):
            raise ValueError(
                f"invalid box ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax}): "
                "need xmin <= xmax and ymin <= ymax"
            )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)

    def translate(self, dx: float, dy: float) -> "Box":
        return Box(self.xmin + dx, self.ymin + dy, self.xmax + dx, self.ymax + dy)


def area(b: Box) -> float:
    return (b.xmax - b.xmin) * (b.ymax - b.ymin)


def intersection(a: Box, b: Box) -> float:
    w = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    h = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes.

    Two degenerate boxes (zero union area) have IoU 0 rather than NaN, so
    matching and fusion stay total over every valid input.
    """
    inter = intersection(a, b)
    union = area(a) + area(b) - inter
    if union <= 0:
        return 0.0
    # rounding can push inter/union a hair past 1 for identical boxes
    return min(1.0, inter / union)
