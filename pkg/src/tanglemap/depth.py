"""Depth image container and pinhole camera helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveDepth

MAX_RANGE_MM = 2000.0


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    @classmethod
    def centered(cls, width: int, height: int, focal: float = 1000.0) -> "Intrinsics":
        return cls(focal, focal, (width - 1) / 2.0, (height - 1) / 2.0)

    def as_tuple(self):
        return (self.fx, self.fy, self.cx, self.cy)


@dataclass(eq=False)
class DepthImage:
    """Depth samples in millimeters with an explicit validity mask.

    Pixels that are non-finite, non-positive or beyond ``max_range`` are
    flagged invalid on construction; their stored depth is left untouched
    but must never be read as a measurement.
    """

    depth: np.ndarray
    valid: np.ndarray
    intrinsics: Intrinsics
    max_range: float = MAX_RANGE_MM

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=float)
        if self.depth.ndim != 2:
            raise ValueError("depth must be a 2D array")
        valid = np.asarray(self.valid, dtype=bool)
        if valid.shape != self.depth.shape:
            raise ValueError("valid mask shape does not match depth")
        with np.errstate(invalid="ignore"):
            in_range = np.isfinite(self.depth) & (self.depth > 0) & (self.depth < self.max_range)
        self.valid = valid & in_range

    @classmethod
    def from_millimeters(cls, raw: np.ndarray, intrinsics: Intrinsics | None = None,
                         max_range: float = MAX_RANGE_MM) -> "DepthImage":
        """Wrap an integer millimeter image; zero marks a missing sample."""
        raw = np.asarray(raw)
        h, w = raw.shape
        if intrinsics is None:
            intrinsics = Intrinsics.centered(w, h)
        return cls(raw.astype(float), raw > 0, intrinsics, max_range)

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def dims(self):
        return (self.width, self.height)

    def valid_depths(self) -> np.ndarray:
        return self.depth[self.valid]


def backproject(px, depth_mm, intrinsics: Intrinsics) -> np.ndarray:
    """Pixel (u, v) at depth z to camera coordinates (X, Y, Z) in mm.

    Accepts a single pixel or an (n, 2) array with matching depths.
    """
    px = np.asarray(px, dtype=float)
    z = np.asarray(depth_mm, dtype=float)
    if np.any(z <= 0):
        raise NonPositiveDepth("depth must be positive")
    fx, fy, cx, cy = intrinsics.as_tuple()
    x = (px[..., 0] - cx) * z / fx
    y = (px[..., 1] - cy) * z / fy
    return np.stack([x, y, np.broadcast_to(z, x.shape)], axis=-1)


def project(points, intrinsics: Intrinsics) -> np.ndarray:
    """Camera coordinates (..., 3) to pixel coordinates (..., 2)."""
    p = np.asarray(points, dtype=float)
    fx, fy, cx, cy = intrinsics.as_tuple()
    return np.stack([fx * p[..., 0] / p[..., 2] + cx, fy * p[..., 1] / p[..., 2] + cy], axis=-1)
