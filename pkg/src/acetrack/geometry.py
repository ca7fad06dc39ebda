"""Bounding-box algebra: state composition, IoU overlap, frame clamping.

Boxes are axis-aligned and stored in center form (cx, cy, w, h) in float
pixels. On disk they serialize as "x,y,w,h" with a 1-based integer top-left
corner, the usual tracking-benchmark convention; the conversion lives in
:func:`bbox_to_xywh` / :func:`bbox_from_xywh`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Minimum side length a box may have after clamping, in pixels.
MIN_SIDE = 4.0

# |ds| bound for log-scale factors; kept a hair inside ln(2) so exp(ds)
# stays strictly within (0.5, 2.0).
LOG_SCALE_LIMIT = math.log(2.0) - 1e-9

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2 = 1.0 / _SQRT2


@dataclass(frozen=True)
class BBox:
    """Axis-aligned target state: center (cx, cy) and size (w, h) in pixels."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box size must be positive, got w={self.w}, h={self.h}")
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.w, self.h)):
            raise ValueError("box fields must be finite")

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """(x1, y1, x2, y2) corner form."""
        hw, hh = 0.5 * self.w, 0.5 * self.h
        return (self.cx - hw, self.cy - hh, self.cx + hw, self.cy + hh)

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)


@dataclass(frozen=True)
class Transform:
    """Candidate motion: translation (dx, dy) plus isotropic log-scale ds."""

    dx: float = 0.0
    dy: float = 0.0
    ds: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.dx, self.dy, self.ds)):
            raise ValueError("transform fields must be finite")


IDENTITY = Transform(0.0, 0.0, 0.0)


def apply_transform(p: BBox, y: Transform) -> BBox:
    """Compose a previous state with a candidate motion.

    Translation is additive on the center, scale multiplicative on the size:
    (cx+dx, cy+dy, w*exp(ds), h*exp(ds)).
    """
    s = math.exp(y.ds)
    return BBox(p.cx + y.dx, p.cy + y.dy, p.w * s, p.h * s)


def compose(a: Transform, b: Transform) -> Transform:
    """Transform composition: translations add, log-scales add."""
    return Transform(a.dx + b.dx, a.dy + b.dy, a.ds + b.ds)


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union overlap in [0, 1]; 0 for disjoint boxes."""
    ax1, ay1, ax2, ay2 = a.corners
    bx1, by1, bx2, by2 = b.corners
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def iou_many(boxes: np.ndarray, ref: BBox) -> np.ndarray:
    """Overlap of each row of an (N, 4) center-form array with `ref`."""
    boxes = np.asarray(boxes, dtype=np.float64)
    x1 = boxes[:, 0] - 0.5 * boxes[:, 2]
    y1 = boxes[:, 1] - 0.5 * boxes[:, 3]
    x2 = boxes[:, 0] + 0.5 * boxes[:, 2]
    y2 = boxes[:, 1] + 0.5 * boxes[:, 3]
    rx1, ry1, rx2, ry2 = ref.corners
    iw = np.minimum(x2, rx2) - np.maximum(x1, rx1)
    ih = np.minimum(y2, ry2) - np.maximum(y1, ry1)
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    union = boxes[:, 2] * boxes[:, 3] + ref.area - inter
    return inter / union


def _inside_fraction(cx, cy, w, h, frame_w, frame_h):
    ix = np.minimum(cx + 0.5 * w, frame_w) - np.maximum(cx - 0.5 * w, 0.0)
    iy = np.minimum(cy + 0.5 * h, frame_h) - np.maximum(cy - 0.5 * h, 0.0)
    return np.clip(ix, 0.0, None) * np.clip(iy, 0.0, None) / (w * h)


def clamp_to_frame(p: BBox, frame_w: float, frame_h: float) -> BBox:
    """Force a box to keep at least 50% of its area inside the frame.

    Sides are floored at MIN_SIDE and capped at sqrt(2) x the frame size;
    boxes already satisfying the area condition are returned unchanged,
    otherwise the center is clamped so each axis keeps >= 1/sqrt(2) of its
    extent inside (the product is then >= 0.5).
    """
    if not (frame_w > 0 and frame_h > 0):
        raise ValueError("frame size must be positive")
    w = min(max(p.w, MIN_SIDE), _SQRT2 * frame_w)
    h = min(max(p.h, MIN_SIDE), _SQRT2 * frame_h)
    if _inside_fraction(p.cx, p.cy, w, h, frame_w, frame_h) >= 0.5:
        if w == p.w and h == p.h:
            return p
        return BBox(p.cx, p.cy, w, h)
    mx = w * (_INV_SQRT2 - 0.5)
    my = h * (_INV_SQRT2 - 0.5)
    cx = min(max(p.cx, mx), frame_w - mx)
    cy = min(max(p.cy, my), frame_h - my)
    return BBox(cx, cy, w, h)


def clamp_boxes(boxes: np.ndarray, frame_w: float, frame_h: float) -> np.ndarray:
    """Vectorized :func:`clamp_to_frame` over an (N, 4) center-form array."""
    boxes = np.asarray(boxes, dtype=np.float64)
    w = np.clip(boxes[:, 2], MIN_SIDE, _SQRT2 * frame_w)
    h = np.clip(boxes[:, 3], MIN_SIDE, _SQRT2 * frame_h)
    cx = boxes[:, 0].copy()
    cy = boxes[:, 1].copy()
    bad = _inside_fraction(cx, cy, w, h, frame_w, frame_h) < 0.5
    if np.any(bad):
        mx = w[bad] * (_INV_SQRT2 - 0.5)
        my = h[bad] * (_INV_SQRT2 - 0.5)
        cx[bad] = np.clip(cx[bad], mx, frame_w - mx)
        cy[bad] = np.clip(cy[bad], my, frame_h - my)
    return np.column_stack([cx, cy, w, h])


def bbox_from_xywh(x: float, y: float, w: float, h: float) -> BBox:
    """Center-form box from a 1-based top-left (x, y, w, h) record."""
    return BBox(float(x) - 1.0 + 0.5 * float(w), float(y) - 1.0 + 0.5 * float(h), float(w), float(h))


def bbox_to_xywh(b: BBox) -> tuple[int, int, int, int]:
    """1-based integer top-left (x, y, w, h) record for a center-form box."""

    def _round(v: float) -> int:
        return int(math.floor(v + 0.5))

    return (
        _round(b.cx - 0.5 * b.w + 1.0),
        _round(b.cy - 0.5 * b.h + 1.0),
        _round(b.w),
        _round(b.h),
    )
