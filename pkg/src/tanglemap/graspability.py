"""
Top-down parallel-jaw grasp detection by template correlation.

The scene is sliced at a depth plane into a binary object image.  For every
hand orientation, the count of object pixels between the open fingers
(contact) and under the finger footprints (collision) is obtained by
correlation.  Collision-free poses keep their normalized contact value,
smoothed with a Gaussian so that poses far from obstacles score higher.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, signal

from .depth import DepthImage
from .errors import InvalidGeometry


@dataclass(frozen=True)
class HandGeometry:
    """Gripper footprint in pixels.

    ``finger_w_px`` is the finger extent across the closing axis and
    ``finger_h_px`` its thickness along it.
    """

    open_width_px: float = 60.0
    finger_w_px: float = 15.0
    finger_h_px: float = 10.0

    def __post_init__(self):
        if min(self.open_width_px, self.finger_w_px, self.finger_h_px) <= 0:
            raise InvalidGeometry("hand dimensions must be positive")


@dataclass(frozen=True)
class GraspConfig:
    hand: HandGeometry = HandGeometry()
    rotations: int = 4
    grasp_depth_mm: float = 25.0
    floor_clearance_mm: Optional[float] = 4.0  # None disables the floor cap
    floor_percentile: float = 90.0
    top_k: int = 5
    nms_radius_px: Optional[float] = None  # default: finger_w_px
    smooth_sigma_px: Optional[float] = None  # default: finger_w_px / 2
    invalid_is_obstacle: bool = True
    open_px: int = 1  # speckle removal on the sliced object mask


@dataclass(eq=False)
class HandTemplate:
    contact_mask: np.ndarray
    collision_mask: np.ndarray
    open_width_px: float
    finger_w_px: float
    finger_h_px: float
    rotation_deg: float

    @property
    def half(self) -> int:
        return self.contact_mask.shape[0] // 2

    def offsets(self, which: str = "collision") -> np.ndarray:
        """(drow, dcol) offsets of the stamp's set pixels from its center."""
        mask = self.collision_mask if which == "collision" else self.contact_mask
        r, c = np.nonzero(mask)
        return np.stack([r - self.half, c - self.half], axis=1)


@dataclass
class GraspCandidate:
    pos: Tuple[float, float]  # (x, y) px
    rotation_index: int
    angle_deg: float
    depth_mm: float
    graspability: float
    entanglement: float = 0.0
    score: float = 0.0

    @property
    def pixel(self) -> Tuple[int, int]:
        """(row, col) of the pose."""
        return int(round(self.pos[1])), int(round(self.pos[0]))


def make_template(hand: HandGeometry, angle_deg: float) -> HandTemplate:
    """Rasterize the hand footprint rotated by ``angle_deg`` (counter-clockwise in the image)."""
    half_open = hand.open_width_px / 2.0
    reach_x = half_open + hand.finger_h_px
    reach_y = hand.finger_w_px / 2.0
    half = int(math.ceil(math.hypot(reach_x, reach_y))) + 1
    yy, xx = np.mgrid[-half:half + 1, -half:half + 1].astype(float)
    th = math.radians(angle_deg)
    c, s = math.cos(th), math.sin(th)
    # image rows grow downward, so a visual ccw rotation uses -y
    u = c * xx - s * yy
    v = s * xx + c * yy
    au, av = np.abs(u), np.abs(v)
    band = av <= reach_y + 1e-9
    contact = band & (au < half_open)
    collision = band & (au >= half_open) & (au <= reach_x + 1e-9)
    return HandTemplate(contact, collision, hand.open_width_px, hand.finger_w_px,
                        hand.finger_h_px, float(angle_deg))


def build_templates(hand: HandGeometry = HandGeometry(), rotations: int = 4) -> List[HandTemplate]:
    """Templates at k * 180 / R degrees, k = 0..R-1."""
    if rotations < 1:
        raise InvalidGeometry("need at least one rotation")
    return [make_template(hand, k * 180.0 / rotations) for k in range(rotations)]


# ---------------------------------------------------------------------------
# Scene slicing and correlation
# ---------------------------------------------------------------------------


def slice_plane(img: DepthImage, grasp_depth_mm: float, region=None,
                floor_clearance_mm: Optional[float] = 4.0,
                floor_percentile: float = 90.0) -> float:
    """Depth of the binarization plane.

    The plane sits ``grasp_depth_mm`` below the nearest valid point (inside
    ``region`` when given) and, with a clearance, never below the floor
    estimated as a high percentile of all valid depths.
    """
    valid = img.valid
    if region is not None:
        x, y, w, h = region
        sub = img.depth[y:y + h, x:x + w][valid[y:y + h, x:x + w]]
    else:
        sub = img.depth[valid]
    if sub.size == 0:
        return -math.inf
    plane = float(sub.min()) + grasp_depth_mm
    if floor_clearance_mm is not None:
        floor = float(np.percentile(img.depth[valid], floor_percentile))
        plane = min(plane, floor - floor_clearance_mm)
    return plane


def object_mask(img: DepthImage, plane_mm: float, open_px: int = 1) -> np.ndarray:
    """Valid pixels nearer than the plane, with specks thinner than 2*open_px+1 removed."""
    mask = img.valid & (img.depth < plane_mm)
    if open_px > 0 and mask.any():
        mask = ndimage.binary_opening(mask, np.ones((3, 3), bool), iterations=open_px)
    return mask


def _correlate_count(mask: np.ndarray, stamp: np.ndarray, pad_value: int) -> np.ndarray:
    """Number of set pixels of ``mask`` under ``stamp`` centered at every pixel.

    Outside the image counts as ``pad_value``.  Stamps are point-symmetric so
    correlation equals convolution.
    """
    half = stamp.shape[0] // 2
    padded = np.pad(mask.astype(float), half, constant_values=float(pad_value))
    out = signal.fftconvolve(padded, stamp.astype(float), mode="valid")
    return np.rint(out)


def contact_count(objects: np.ndarray, tmpl: HandTemplate) -> np.ndarray:
    return _correlate_count(objects, tmpl.contact_mask, 0)


def collision_count(obstacles: np.ndarray, tmpl: HandTemplate) -> np.ndarray:
    return _correlate_count(obstacles, tmpl.collision_mask, 1)


def graspability_map(img: DepthImage, tmpl: HandTemplate, grasp_depth_mm: float = 25.0,
                     region=None, floor_clearance_mm: Optional[float] = 4.0,
                     floor_percentile: float = 90.0, smooth_sigma_px: Optional[float] = None,
                     invalid_is_obstacle: bool = True, plane_mm: Optional[float] = None,
                     open_px: int = 1):
    """Graspability of every pixel for one hand orientation.

    Returns an (h, w) map, zero wherever the finger footprint would touch an
    object (or an invalid / out-of-image pixel when ``invalid_is_obstacle``).
    """
    if plane_mm is None:
        plane_mm = slice_plane(img, grasp_depth_mm, region, floor_clearance_mm, floor_percentile)
    objects = object_mask(img, plane_mm, open_px)
    return grasp_response(objects, img.valid, tmpl, smooth_sigma_px, invalid_is_obstacle)


def grasp_response(objects: np.ndarray, valid: np.ndarray, tmpl: HandTemplate,
                   smooth_sigma_px: Optional[float] = None,
                   invalid_is_obstacle: bool = True) -> np.ndarray:
    """Graspability from a binary object image (see :func:`graspability_map`)."""
    if not objects.any():
        return np.zeros(objects.shape)
    obstacles = objects | ~valid if invalid_is_obstacle else objects
    free = collision_count(obstacles, tmpl) == 0
    contact = contact_count(objects, tmpl) / float(tmpl.contact_mask.sum())
    sigma = tmpl.finger_w_px / 2.0 if smooth_sigma_px is None else smooth_sigma_px
    g = contact * free
    if sigma > 0:
        g = ndimage.gaussian_filter(g, sigma, mode="constant")
    # collision gate applied after smoothing too: blurring must not leak into unsafe poses
    g = np.where(free & (contact > 0), g, 0.0)
    return np.clip(g, 0.0, None)


def stamp_collides(obstacles: np.ndarray, tmpl: HandTemplate, row: int, col: int) -> bool:
    """Direct check of the finger footprint at one pose; out of image counts as a hit."""
    h, w = obstacles.shape
    off = tmpl.offsets("collision")
    rr = off[:, 0] + row
    cc = off[:, 1] + col
    inside = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    if not inside.all():
        return True
    return bool(obstacles[rr, cc].any())


# ---------------------------------------------------------------------------
# Candidate extraction
# ---------------------------------------------------------------------------


def _contact_depth(img: DepthImage, objects: np.ndarray, tmpl: HandTemplate, row: int, col: int):
    off = tmpl.offsets("contact")
    rr = np.clip(off[:, 0] + row, 0, img.height - 1)
    cc = np.clip(off[:, 1] + col, 0, img.width - 1)
    sel = objects[rr, cc]
    if not sel.any():
        sel = img.valid[rr, cc]
    if not sel.any():
        return float("nan")
    return float(img.depth[rr[sel], cc[sel]].min())


def extract_candidates(gmaps: Sequence[np.ndarray], region=None, top_k: int = 5,
                       nms_radius: float = 15.0, templates: Optional[Sequence[HandTemplate]] = None,
                       img: Optional[DepthImage] = None,
                       objects: Optional[np.ndarray] = None) -> List[GraspCandidate]:
    """Strongest separated local maxima over all orientations inside ``region``.

    ``region`` is (x, y, w, h).  Candidates closer than ``nms_radius`` to a
    stronger one are dropped; ties resolve to smaller row, column, then
    rotation index.  Depth is filled in when ``img`` and ``templates`` are given.
    """
    stack = np.stack([np.asarray(g, dtype=float) for g in gmaps])
    R, h, w = stack.shape
    best = stack.max(axis=0)
    rot = stack.argmax(axis=0)
    if region is not None:
        x, y, rw, rh = region
        inside = np.zeros((h, w), dtype=bool)
        inside[max(y, 0):y + rh, max(x, 0):x + rw] = True
        best = np.where(inside, best, 0.0)
    peaks = (best > 0) & (best == ndimage.maximum_filter(best, size=3, mode="constant"))
    rows, cols = np.nonzero(peaks)
    if rows.size == 0:
        return []
    vals = best[rows, cols]
    order = np.lexsort((cols, rows, -vals))
    kept: List[Tuple[int, int]] = []
    r2 = nms_radius ** 2
    for i in order:
        r, c = int(rows[i]), int(cols[i])
        if any((r - kr) ** 2 + (c - kc) ** 2 < r2 for kr, kc in kept):
            continue
        kept.append((r, c))
        if len(kept) >= top_k:
            break
    out = []
    for r, c in kept:
        k = int(rot[r, c])
        angle = templates[k].rotation_deg if templates is not None else k * 180.0 / R
        depth = float("nan")
        if img is not None and templates is not None:
            obj = objects if objects is not None else img.valid
            depth = _contact_depth(img, obj, templates[k], r, c)
        out.append(GraspCandidate((float(c), float(r)), k, angle, depth, float(best[r, c])))
    return out


def detect_grasps(img: DepthImage, cfg: GraspConfig = GraspConfig(), region=None,
                  templates: Optional[Sequence[HandTemplate]] = None):
    """Graspability maps and candidates for one region (whole image when None).

    Returns ``(candidates, gmaps, objects)``.
    """
    templates = templates or build_templates(cfg.hand, cfg.rotations)
    plane = slice_plane(img, cfg.grasp_depth_mm, region, cfg.floor_clearance_mm,
                        cfg.floor_percentile)
    objects = object_mask(img, plane, cfg.open_px)
    h, w = objects.shape
    y0, y1, x0, x1 = 0, h, 0, w
    if region is not None:
        # every value inside the region depends only on pixels within this margin
        sigma = cfg.smooth_sigma_px if cfg.smooth_sigma_px is not None else cfg.hand.finger_w_px / 2.0
        margin = max(t.half for t in templates) + int(4.0 * sigma + 0.5) + 1
        rx, ry, rw, rh = region
        y0, y1 = max(ry - margin, 0), min(ry + rh + margin, h)
        x0, x1 = max(rx - margin, 0), min(rx + rw + margin, w)
    gmaps = []
    for t in templates:
        full = np.zeros((h, w))
        full[y0:y1, x0:x1] = grasp_response(objects[y0:y1, x0:x1], img.valid[y0:y1, x0:x1], t,
                                            cfg.smooth_sigma_px, cfg.invalid_is_obstacle)
        gmaps.append(full)
    radius = cfg.nms_radius_px if cfg.nms_radius_px is not None else cfg.hand.finger_w_px
    cands = extract_candidates(gmaps, region, cfg.top_k, radius, templates, img, objects)
    return cands, gmaps, objects
