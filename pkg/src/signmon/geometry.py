"""Contours of binary images and the measurements taken on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels

MIN_DISTINCT_POINTS = 5


class DegenerateContour(ValueError):
    """Raised when a contour has no principal axis (all points coincide)."""


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed 8-connected pixel traversal; ``points`` holds (x, y) rows."""

    points: np.ndarray
    kind: str = "outer"

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.int32).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("a contour needs at least one point")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @cached_property
    def bbox(self) -> tuple[int, int, int, int]:
        """Inclusive ``(xmin, ymin, xmax, ymax)``."""
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])

    @cached_property
    def mask(self) -> np.ndarray:
        """Filled interior over :attr:`bbox` (even-odd rule plus the border itself)."""
        x0, y0, x1, y1 = self.bbox
        return kernels.fill_polygon(self.points, x0, y0, x1 - x0 + 1, y1 - y0 + 1)

    def distinct_points(self) -> int:
        return len(np.unique(self.points, axis=0))

    def translated(self, dx: int, dy: int) -> Contour:
        return Contour(self.points + np.array([dx, dy], dtype=np.int32), self.kind)


@dataclass(frozen=True)
class FittedLine:
    centroid: tuple[float, float]
    direction: tuple[float, float]


def detect_contours(binary: np.ndarray) -> list[Contour]:
    """All outer and hole borders of the 8-connected foreground, in raster-scan order."""
    binary = np.ascontiguousarray(binary, dtype=np.uint8)
    pts, offsets, holes = kernels.find_borders(binary)
    return [
        Contour(pts[offsets[k]:offsets[k + 1]], "hole" if holes[k] else "outer")
        for k in range(len(holes))
    ]


def _points(c):
    return c.points if isinstance(c, Contour) else np.asarray(c).reshape(-1, 2)


def contour_area(c) -> float:
    """Absolute shoelace area of the contour's point polygon."""
    p = _points(c).astype(np.float64)
    x, y = p[:, 0], p[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))) * 0.5


def _principal_angle(cxx, cxy, cyy):
    if cxx == 0.0 and cxy == 0.0 and cyy == 0.0:
        raise DegenerateContour("all contour points coincide")
    return 0.5 * math.atan2(2.0 * cxy, cxx - cyy)


def fit_line(c) -> FittedLine:
    """Total least squares line: centroid plus the covariance's major axis."""
    p = _points(c).astype(np.float64)
    mean = p.mean(axis=0)
    d = p - mean
    theta = _principal_angle(np.mean(d[:, 0] ** 2), np.mean(d[:, 0] * d[:, 1]), np.mean(d[:, 1] ** 2))
    return FittedLine((float(mean[0]), float(mean[1])), (math.cos(theta), math.sin(theta)))


def angle_to_horizontal(direction) -> float:
    """Acute angle in degrees between a direction and the x axis, in [0, 90]."""
    dx, dy = direction
    norm = math.hypot(dx, dy)
    return math.degrees(math.acos(min(1.0, abs(dx) / norm)))


def orientation_deg(c) -> float:
    return angle_to_horizontal(fit_line(c).direction)


def measure_contours(contours: list[Contour]):
    """Vectorized areas, orientations, bboxes and distinct-point counts.

    Orientation is NaN for a contour whose points all coincide.  Distinct
    counts are exact below ``4 * MIN_DISTINCT_POINTS`` points and a lower
    bound above.
    """
    if not contours:
        return np.zeros(0), np.zeros(0), np.zeros((0, 4), dtype=np.int64), np.zeros(0, dtype=np.int64)
    lengths = np.fromiter((len(c) for c in contours), dtype=np.int64, count=len(contours))
    offsets = np.zeros(len(contours) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    pts = np.concatenate([c.points for c in contours])
    area, cxx, cxy, cyy, bbox, distinct = kernels.contour_measures(pts, offsets, MIN_DISTINCT_POINTS)
    theta = 0.5 * np.arctan2(2.0 * cxy, cxx - cyy)
    sigma = np.degrees(np.arccos(np.minimum(1.0, np.abs(np.cos(theta)))))
    sigma[(cxx == 0) & (cxy == 0) & (cyy == 0)] = np.nan
    return area, sigma, bbox, distinct


def _overlap(b1, b2):
    return b1[0] <= b2[2] and b2[0] <= b1[2] and b1[1] <= b2[3] and b2[1] <= b1[3]


def regions_disjoint(c1: Contour, c2: Contour, w: int | None = None, h: int | None = None) -> bool:
    """True when the filled interiors of the two contours share no pixel.

    Masks are only rasterized where the bounding boxes meet; ``w`` and ``h``
    name the frame the contours live in and are checked, not needed.
    """
    for c in (c1, c2):
        if w is not None and h is not None:
            x0, y0, x1, y1 = c.bbox
            if x0 < 0 or y0 < 0 or x1 >= w or y1 >= h:
                raise ValueError("contour lies outside the frame")
    b1, b2 = c1.bbox, c2.bbox
    if not _overlap(b1, b2):
        return True
    x0, y0 = max(b1[0], b2[0]), max(b1[1], b2[1])
    x1, y1 = min(b1[2], b2[2]), min(b1[3], b2[3])
    m1 = c1.mask[y0 - b1[1]:y1 - b1[1] + 1, x0 - b1[0]:x1 - b1[0] + 1]
    m2 = c2.mask[y0 - b2[1]:y1 - b2[1] + 1, x0 - b2[0]:x1 - b2[0] + 1]
    return not bool(np.any(m1 & m2))
