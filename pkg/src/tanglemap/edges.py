"""
Depth edges to 3D line segments.

Edges are depth-gradient maxima (Sobel on a lightly smoothed depth map,
non-maximum suppression, hysteresis).  Edge pixels are traced into chains,
each chain is split recursively at its point of maximum deviation and
near-collinear neighbours are merged back.  Segment endpoints are lifted to
camera space with the nearest valid depth around them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .depth import DepthImage, backproject
from .errors import DegenerateSegment, EmptyImage
from .gli import Segment3D

# 8-neighbourhood, 4-connected moves first so chains prefer straight steps
_NEIGHBOURS = ((0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class EdgeConfig:
    grad_threshold: float = 1.5  # mm/px, high hysteresis threshold
    low_ratio: float = 0.4
    sigma: float = 1.0  # px, pre-smoothing
    min_len_px: float = 8.0
    fit_tol_px: float = 2.0
    max_seg_len_px: Optional[float] = 40.0
    merge_angle_deg: float = 5.0


@dataclass(eq=False)
class EdgeSegmentSet:
    segments: List[Segment3D]
    source_dims: Tuple[int, int]
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __getitem__(self, i):
        return self.segments[i]

    def _stack(self, name):
        if name not in self._cache:
            if self.segments:
                self._cache[name] = np.stack([getattr(s, name) for s in self.segments])
            else:
                width = 2 if name.startswith("pixel") else 3
                self._cache[name] = np.zeros((0, width))
        return self._cache[name]

    @property
    def p0(self) -> np.ndarray:
        return self._stack("p0")

    @property
    def p1(self) -> np.ndarray:
        return self._stack("p1")

    @property
    def pixel_p0(self) -> np.ndarray:
        return self._stack("pixel_p0")

    @property
    def pixel_p1(self) -> np.ndarray:
        return self._stack("pixel_p1")


# ---------------------------------------------------------------------------
# Edge detection
# ---------------------------------------------------------------------------


def _fill_invalid(depth, valid):
    if valid.all():
        return depth
    _, (ri, ci) = ndimage.distance_transform_edt(~valid, return_indices=True)
    return depth[ri, ci]


def depth_gradient(img: DepthImage, sigma: float = 1.0):
    """Sobel gradient of the depth map in mm/px, zeroed near invalid pixels."""
    d = _fill_invalid(img.depth, img.valid)
    if sigma > 0:
        d = ndimage.gaussian_filter(d, sigma, mode="nearest")
    gx = ndimage.sobel(d, axis=1, mode="nearest") / 8.0
    gy = ndimage.sobel(d, axis=0, mode="nearest") / 8.0
    reach = 1 + int(math.ceil(2 * sigma))
    support = ndimage.binary_erosion(img.valid, np.ones((3, 3), bool),
                                     iterations=reach, border_value=1)
    gx[~support] = 0.0
    gy[~support] = 0.0
    return gx, gy


def _non_max_suppression(mag, gx, gy):
    h, w = mag.shape
    pad = np.pad(mag, 1)
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = (np.floor((angle + 22.5) / 45.0).astype(int)) % 4
    # (drow, dcol) of the forward neighbour along the gradient for each sector
    steps = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros_like(mag, dtype=bool)
    for k, (dr, dc) in steps.items():
        fwd = pad[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        bwd = pad[1 - dr:1 - dr + h, 1 - dc:1 - dc + w]
        # asymmetric comparison keeps exactly one pixel on a two-pixel plateau
        keep |= (sector == k) & (mag >= bwd) & (mag > fwd)
    return keep


def detect_edges(img: DepthImage, grad_threshold: float = 1.5,
                 low_ratio: float = 0.4, sigma: float = 1.0) -> np.ndarray:
    """Binary edge image of depth discontinuities.

    Edge pixels are gradient maxima above ``low_ratio * grad_threshold`` that
    connect to at least one maximum above ``grad_threshold``.
    """
    if not img.valid.any():
        raise EmptyImage("depth image has no valid pixel")
    gx, gy = depth_gradient(img, sigma)
    mag = np.hypot(gx, gy)
    nms = _non_max_suppression(mag, gx, gy) & (mag > 0)
    weak = nms & (mag >= low_ratio * grad_threshold)
    strong = nms & (mag >= grad_threshold)
    labels, nlab = ndimage.label(weak, structure=np.ones((3, 3), bool))
    if nlab == 0:
        return np.zeros_like(weak)
    keep = np.zeros(nlab + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels]


# ---------------------------------------------------------------------------
# Chains and split-and-merge
# ---------------------------------------------------------------------------


def trace_chains(edges: np.ndarray) -> List[np.ndarray]:
    """Order edge pixels into chains of (row, col) coordinates.

    Chains start at end pixels (one neighbour) in raster order; pixels left
    over afterwards (closed loops, junction branches) are grown in both
    directions from their first raster pixel.  Deterministic.
    """
    rows, cols = np.nonzero(edges)
    pixels = set(zip(rows.tolist(), cols.tolist()))
    if not pixels:
        return []
    count = ndimage.convolve(edges.astype(np.int32), np.ones((3, 3), np.int32),
                             mode="constant") - edges.astype(np.int32)
    order = sorted(pixels)
    visited = set()

    def walk(start):
        path = []
        cur = start
        while True:
            nxt = None
            for dr, dc in _NEIGHBOURS:
                cand = (cur[0] + dr, cur[1] + dc)
                if cand in pixels and cand not in visited:
                    nxt = cand
                    break
            if nxt is None:
                return path
            visited.add(nxt)
            path.append(nxt)
            cur = nxt

    chains = []
    for p in order:
        if p in visited or count[p] != 1:
            continue
        visited.add(p)
        chains.append([p] + walk(p))
    for p in order:
        if p in visited:
            continue
        visited.add(p)
        forward = walk(p)
        backward = walk(p)
        chains.append(backward[::-1] + [p] + forward)
    return [np.asarray(c, dtype=int) for c in chains]


def _max_deviation(pts: np.ndarray, i0: int, i1: int):
    a = pts[i0].astype(float)
    b = pts[i1].astype(float)
    seg = pts[i0:i1 + 1].astype(float)
    ab = b - a
    norm = math.hypot(ab[0], ab[1])
    if norm == 0:
        dev = np.hypot(seg[:, 0] - a[0], seg[:, 1] - a[1])
    else:
        dev = np.abs(ab[0] * (seg[:, 1] - a[1]) - ab[1] * (seg[:, 0] - a[0])) / norm
    k = int(np.argmax(dev))
    return float(dev[k]), i0 + k


def split_chain(pts: np.ndarray, tol: float) -> List[int]:
    """Breakpoint indices such that every piece deviates at most ``tol``."""
    n = len(pts)
    if n < 2:
        return [0]
    breaks = {0, n - 1}
    stack = [(0, n - 1)]
    while stack:
        i0, i1 = stack.pop()
        if i1 - i0 < 2:
            continue
        dev, k = _max_deviation(pts, i0, i1)
        if dev > tol and i0 < k < i1:
            breaks.add(k)
            stack.append((i0, k))
            stack.append((k, i1))
    return sorted(breaks)


def merge_breaks(pts: np.ndarray, breaks: List[int], tol: float,
                 max_angle_deg: float) -> List[int]:
    """Drop interior breakpoints between near-collinear pieces."""
    breaks = list(breaks)
    cos_lim = math.cos(math.radians(max_angle_deg))
    changed = True
    while changed:
        changed = False
        for k in range(1, len(breaks) - 1):
            a, b, c = breaks[k - 1], breaks[k], breaks[k + 1]
            v1 = (pts[b] - pts[a]).astype(float)
            v2 = (pts[c] - pts[b]).astype(float)
            n1, n2 = np.hypot(*v1), np.hypot(*v2)
            if n1 == 0 or n2 == 0:
                continue
            if np.dot(v1, v2) / (n1 * n2) < cos_lim:
                continue
            if _max_deviation(pts, a, c)[0] <= tol:
                del breaks[k]
                changed = True
                break
    return breaks


def _subdivide(i0: int, i1: int, length: float, max_len: Optional[float]):
    if not max_len or length <= max_len:
        return [(i0, i1)]
    k = int(math.ceil(length / max_len))
    idx = [i0 + int(round(m * (i1 - i0) / k)) for m in range(k + 1)]
    return [(a, b) for a, b in zip(idx[:-1], idx[1:]) if b > a]


def robust_depth(img: DepthImage, row: int, col: int) -> Optional[float]:
    """Nearest (minimum) valid depth in the 3x3 neighbourhood, or None."""
    r0, r1 = max(row - 1, 0), min(row + 2, img.height)
    c0, c1 = max(col - 1, 0), min(col + 2, img.width)
    win = img.depth[r0:r1, c0:c1]
    ok = img.valid[r0:r1, c0:c1]
    if not ok.any():
        return None
    return float(win[ok].min())


def fit_segments(edges: np.ndarray, img: DepthImage, min_len_px: float = 8.0,
                 fit_tol_px: float = 2.0, max_seg_len_px: Optional[float] = 40.0,
                 merge_angle_deg: float = 5.0) -> EdgeSegmentSet:
    """Approximate edge chains by straight segments lifted to camera space."""
    segments: List[Segment3D] = []
    for chain in trace_chains(edges):
        if len(chain) < 2:
            continue
        breaks = split_chain(chain, fit_tol_px)
        breaks = merge_breaks(chain, breaks, fit_tol_px, merge_angle_deg)
        for a, b in zip(breaks[:-1], breaks[1:]):
            length = float(np.hypot(*(chain[b] - chain[a])))
            if length < min_len_px:
                continue
            for i0, i1 in _subdivide(a, b, length, max_seg_len_px):
                seg = _lift(chain[i0], chain[i1], img)
                if seg is not None:
                    segments.append(seg)
    return EdgeSegmentSet(segments, img.dims)


def _lift(rc0, rc1, img: DepthImage) -> Optional[Segment3D]:
    z0 = robust_depth(img, int(rc0[0]), int(rc0[1]))
    z1 = robust_depth(img, int(rc1[0]), int(rc1[1]))
    if z0 is None or z1 is None:
        return None
    px0 = np.array([rc0[1], rc0[0]], dtype=float)
    px1 = np.array([rc1[1], rc1[0]], dtype=float)
    p0 = backproject(px0, z0, img.intrinsics)
    p1 = backproject(px1, z1, img.intrinsics)
    try:
        return Segment3D(p0, p1, px0, px1)
    except DegenerateSegment:
        return None


def extract_segments(img: DepthImage, cfg: EdgeConfig = EdgeConfig()) -> EdgeSegmentSet:
    edges = detect_edges(img, cfg.grad_threshold, cfg.low_ratio, cfg.sigma)
    return fit_segments(edges, img, cfg.min_len_px, cfg.fit_tol_px,
                        cfg.max_seg_len_px, cfg.merge_angle_deg)
