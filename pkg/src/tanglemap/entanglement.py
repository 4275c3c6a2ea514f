"""
Entanglement map: sliding-window writhe and density blended with the
center mask into a per-pixel likelihood in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .depth import DepthImage
from .edges import EdgeConfig, EdgeSegmentSet, extract_segments
from .errors import DimensionMismatch, WindowLargerThanImage
from .gli import (
    EPS_INT,
    TopologyCoordinate,
    WritheMatrix,
    center_mask,
    density,
    topology_coordinate,
    writhe,
    writhe_matrix_from_arrays,
)


@dataclass(frozen=True)
class MapWeights:
    sigma_w: float = 0.8
    sigma_d: float = 0.15
    sigma_c: float = 0.05

    def __post_init__(self):
        vals = (self.sigma_w, self.sigma_d, self.sigma_c)
        if min(vals) < 0 or abs(sum(vals) - 1.0) > 1e-12:
            raise ValueError(f"weights must be >= 0 and sum to 1, got {vals}")

    def as_tuple(self):
        return (self.sigma_w, self.sigma_d, self.sigma_c)


@dataclass(frozen=True)
class MapConfig:
    window_px: Optional[Tuple[int, int]] = None  # default: quarter of the image
    stride_px: Optional[Tuple[int, int]] = None  # default: half the window
    weights: MapWeights = MapWeights()
    sigma_d_max: float = 0.5
    dilation_px: int = 8
    zero_tol: float = 0.0
    eps_int: float = EPS_INT
    edges: EdgeConfig = EdgeConfig()

    def window_for(self, dims) -> Tuple[int, int]:
        if self.window_px is not None:
            return tuple(int(v) for v in self.window_px)
        return (max(1, dims[0] // 4), max(1, dims[1] // 4))

    def stride_for(self, window) -> Tuple[int, int]:
        if self.stride_px is not None:
            return tuple(int(v) for v in self.stride_px)
        return (max(1, window[0] // 2), max(1, window[1] // 2))


@dataclass(eq=False)
class WindowGrid:
    window_px: Tuple[int, int]
    stride_px: Tuple[int, int]
    image_dims: Tuple[int, int]
    origins_x: np.ndarray
    origins_y: np.ndarray
    writhe: np.ndarray  # (ny, nx)
    density: np.ndarray
    segment_count: np.ndarray

    @property
    def shape(self):
        return self.writhe.shape

    @property
    def centers_x(self) -> np.ndarray:
        return self.origins_x + (self.window_px[0] - 1) / 2.0

    @property
    def centers_y(self) -> np.ndarray:
        return self.origins_y + (self.window_px[1] - 1) / 2.0

    def rects(self):
        """Window rectangles (x, y, w, h) in row-major order."""
        w, h = self.window_px
        return [(int(x), int(y), w, h) for y in self.origins_y for x in self.origins_x]


@dataclass(eq=False)
class MapResult:
    map: np.ndarray
    coordinate: TopologyCoordinate
    segments: EdgeSegmentSet
    matrix: Optional[WritheMatrix]
    grid: Optional[WindowGrid]
    center_mask: np.ndarray
    weights: MapWeights


def window_origins(length: int, window: int, stride: int) -> np.ndarray:
    """Window start offsets tiling ``length``; the last one is clamped to the border."""
    if window > length:
        raise WindowLargerThanImage(f"window {window} exceeds image size {length}")
    starts = list(range(0, length - window + 1, stride))
    if starts[-1] + window < length:
        starts.append(length - window)
    return np.asarray(starts, dtype=int)


def _segments_in_rect(pix0: np.ndarray, pix1: np.ndarray, x0, y0, x1, y1) -> np.ndarray:
    """Liang-Barsky test of 2D segments against the closed box [x0,x1]x[y0,y1]."""
    d = pix1 - pix0
    t0 = np.zeros(len(pix0))
    t1 = np.ones(len(pix0))
    ok = np.ones(len(pix0), dtype=bool)
    for p, q in ((-d[:, 0], pix0[:, 0] - x0), (d[:, 0], x1 - pix0[:, 0]),
                 (-d[:, 1], pix0[:, 1] - y0), (d[:, 1], y1 - pix0[:, 1])):
        parallel = p == 0
        ok &= ~(parallel & (q < 0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = q / p
        t0 = np.where(~parallel & (p < 0), np.maximum(t0, r), t0)
        t1 = np.where(~parallel & (p > 0), np.minimum(t1, r), t1)
    return ok & (t0 <= t1)


def sliding_topology(segments: EdgeSegmentSet, window_px: Tuple[int, int],
                     stride_px: Tuple[int, int], matrix: Optional[WritheMatrix] = None,
                     eps_int: float = EPS_INT, zero_tol: float = 0.0) -> WindowGrid:
    """Writhe, density and segment count of every sliding window.

    A segment belongs to each window its pixel footprint touches and is used
    whole, so window matrices are sub-matrices of the global one.
    """
    width, height = segments.source_dims
    ox = window_origins(width, int(window_px[0]), int(stride_px[0]))
    oy = window_origins(height, int(window_px[1]), int(stride_px[1]))
    shape = (len(oy), len(ox))
    W = np.zeros(shape)
    D = np.zeros(shape)
    counts = np.zeros(shape, dtype=int)
    n = len(segments)
    if n >= 2 and matrix is None:
        matrix = writhe_matrix_from_arrays(segments.p0, segments.p1, eps_int, zero_tol)
    if n > 0:
        pix0, pix1 = segments.pixel_p0, segments.pixel_p1
        for r, y in enumerate(oy):
            for c, x in enumerate(ox):
                inside = _segments_in_rect(pix0, pix1, x - 0.5, y - 0.5,
                                           x + window_px[0] - 0.5, y + window_px[1] - 0.5)
                idx = np.flatnonzero(inside)
                counts[r, c] = idx.size
                if idx.size < 2:
                    continue
                sub = WritheMatrix(matrix.values[np.ix_(idx, idx)])
                W[r, c] = writhe(sub)
                D[r, c] = density(sub)
    return WindowGrid((int(window_px[0]), int(window_px[1])),
                      (int(stride_px[0]), int(stride_px[1])),
                      (width, height), ox, oy, W, D, counts)


def adapt_weights(initial: MapWeights, grid_or_mean, global_d: float,
                  sigma_d_max: float = 0.5) -> MapWeights:
    """Raise the density weight when windows are denser than the whole scene.

    ``grid_or_mean`` is a :class:`WindowGrid` or the mean window density
    directly.
    """
    mean_d = float(np.mean(grid_or_mean.density)) if isinstance(grid_or_mean, WindowGrid) \
        else float(grid_or_mean)
    if not (global_d > 0 and mean_d > global_d):
        return initial
    sigma_d = min(mean_d / global_d * initial.sigma_d, sigma_d_max)
    sigma_w = 1.0 - sigma_d - initial.sigma_c
    return MapWeights(sigma_w, sigma_d, initial.sigma_c)


def _minmax(a: np.ndarray) -> np.ndarray:
    lo, hi = float(a.min()), float(a.max())
    if not hi > lo:
        return np.zeros_like(a, dtype=float)
    return (a - lo) / (hi - lo)


def upsample(grid: WindowGrid, cells: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of cell values anchored at window centers.

    Pixels outside the outermost centers take the nearest cell value.
    """
    width, height = grid.image_dims
    cx, cy = grid.centers_x, grid.centers_y
    xs = np.clip(np.arange(width, dtype=float), cx[0], cx[-1])
    ys = np.clip(np.arange(height, dtype=float), cy[0], cy[-1])
    if len(cx) == 1 and len(cy) == 1:
        return np.full((height, width), float(cells[0, 0]))
    if len(cx) == 1:
        col = np.interp(ys, cy, cells[:, 0])
        return np.repeat(col[:, None], width, axis=1)
    if len(cy) == 1:
        row = np.interp(xs, cx, cells[0, :])
        return np.repeat(row[None, :], height, axis=0)
    interp = RegularGridInterpolator((cy, cx), cells, method="linear")
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return interp(np.stack([yy.ravel(), xx.ravel()], axis=1)).reshape(height, width)


def compose_map(grid: WindowGrid, mask: np.ndarray, weights: MapWeights) -> np.ndarray:
    """Blend normalized window writhe, window density and the center mask."""
    width, height = grid.image_dims
    if mask.shape != (height, width):
        raise DimensionMismatch(f"mask {mask.shape} vs image {(height, width)}")
    ws = upsample(grid, _minmax(grid.writhe))
    ds = upsample(grid, _minmax(grid.density))
    emap = weights.sigma_w * ws + weights.sigma_d * ds + weights.sigma_c * mask.astype(float)
    return np.clip(emap, 0.0, 1.0)


def generate_detailed(img: DepthImage, cfg: MapConfig = MapConfig()) -> MapResult:
    segments = extract_segments(img, cfg.edges)
    dims = img.dims
    empty_mask = np.zeros((img.height, img.width), dtype=bool)
    if len(segments) < 2:
        return MapResult(np.zeros((img.height, img.width)), TopologyCoordinate.empty(len(segments)),
                         segments, None, None, empty_mask, cfg.weights)
    T = writhe_matrix_from_arrays(segments.p0, segments.p1, cfg.eps_int, cfg.zero_tol)
    coord = topology_coordinate(T)
    mask = empty_mask if coord.center is None else \
        center_mask(segments.segments, coord.center, dims, cfg.dilation_px)
    window = cfg.window_for(dims)
    grid = sliding_topology(segments, window, cfg.stride_for(window), matrix=T)
    weights = adapt_weights(cfg.weights, grid, coord.density, cfg.sigma_d_max)
    emap = compose_map(grid, mask, weights)
    return MapResult(emap, coord, segments, T, grid, mask, weights)


def generate(img: DepthImage, cfg: MapConfig = MapConfig()):
    """Entanglement map and global topology coordinate of a depth image.

    Scenes with fewer than two segments get an all-zero map and a zero
    coordinate.
    """
    res = generate_detailed(img, cfg)
    return res.map, res.coordinate
