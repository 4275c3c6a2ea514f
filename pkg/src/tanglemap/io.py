"""File formats: 16-bit depth PNGs, JSON documents and visualization images."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image
from skimage.draw import disk, line

from .depth import DepthImage, Intrinsics

# Heatmap lookup table: piecewise linear through these (index, r, g, b)
# anchors, dark blue for low values and yellow for high ones.
HEATMAP_ANCHORS = (
    (0, 20, 24, 140),
    (64, 30, 90, 200),
    (128, 30, 170, 160),
    (192, 150, 215, 70),
    (255, 255, 230, 30),
)


def heatmap_lut() -> np.ndarray:
    """(256, 3) uint8 color table of the map images."""
    idx = np.array([a[0] for a in HEATMAP_ANCHORS], dtype=float)
    out = np.empty((256, 3), dtype=np.uint8)
    xs = np.arange(256, dtype=float)
    for ch in range(3):
        vals = np.array([a[ch + 1] for a in HEATMAP_ANCHORS], dtype=float)
        out[:, ch] = np.rint(np.interp(xs, idx, vals)).astype(np.uint8)
    return out


HEATMAP_LUT = heatmap_lut()


# ---------------------------------------------------------------------------
# Depth
# ---------------------------------------------------------------------------


def read_depth_png(path, intrinsics: Optional[Intrinsics] = None,
                   focal: float = 1000.0) -> DepthImage:
    """Load a single-channel 16-bit PNG in millimeters; 0 marks a missing sample."""
    with Image.open(path) as im:
        raw = np.array(im)
    if raw.ndim != 2:
        raise ValueError(f"{path}: expected a single-channel depth image, got shape {raw.shape}")
    if raw.dtype.kind not in "ui":
        raise ValueError(f"{path}: expected integer depth, got {raw.dtype}")
    raw = raw.astype(np.int64)
    if intrinsics is None:
        intrinsics = Intrinsics.centered(raw.shape[1], raw.shape[0], focal)
    return DepthImage.from_millimeters(raw, intrinsics)


def depth_to_uint16(img: DepthImage) -> np.ndarray:
    mm = np.rint(np.where(img.valid, img.depth, 0.0))
    return np.clip(mm, 0, 65535).astype(np.uint16)


def write_depth_png(path, img: DepthImage) -> None:
    """Save depth as 16-bit millimeters, invalid pixels as 0."""
    Image.fromarray(depth_to_uint16(img)).save(path, format="PNG")


def write_label_png(path, labels: np.ndarray) -> None:
    """Part labels shifted by one (0 = floor) as a 16-bit PNG."""
    Image.fromarray((labels.astype(np.int64) + 1).astype(np.uint16)).save(path, format="PNG")


def read_label_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im).astype(np.int32) - 1


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Stable JSON text: sorted keys, fixed indent, non-finite floats as null."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Images
# ---------------------------------------------------------------------------


def colorize(values: np.ndarray, vmax: Optional[float] = 1.0) -> np.ndarray:
    """Map values in [0, vmax] through the heatmap table to RGB uint8."""
    v = np.asarray(values, dtype=float)
    if vmax is None:
        vmax = float(v.max()) if v.size and v.max() > 0 else 1.0
    idx = np.rint(np.clip(np.nan_to_num(v / vmax), 0.0, 1.0) * 255).astype(np.uint8)
    return HEATMAP_LUT[idx]


def write_map_png(path, emap: np.ndarray) -> None:
    Image.fromarray(colorize(emap, 1.0)).save(path, format="PNG")


def write_matrix_png(path, matrix: Optional[np.ndarray], min_size: int = 256) -> None:
    """Writhe matrix as a heatmap scaled to its maximum, enlarged by pixel repetition."""
    if matrix is None or matrix.size == 0:
        matrix = np.zeros((1, 1))
    rgb = colorize(matrix, None)
    n = max(matrix.shape)
    rep = max(1, int(math.ceil(min_size / n)))
    rgb = np.repeat(np.repeat(rgb, rep, axis=0), rep, axis=1)
    Image.fromarray(rgb).save(path, format="PNG")


def depth_preview(img: DepthImage) -> np.ndarray:
    """Grayscale RGB rendering of depth, nearer is brighter, invalid is black."""
    gray = np.zeros(img.depth.shape)
    if img.valid.any():
        d = img.depth[img.valid]
        lo, hi = float(d.min()), float(d.max())
        span = hi - lo if hi > lo else 1.0
        gray[img.valid] = 40.0 + 215.0 * (hi - img.depth[img.valid]) / span
    g = np.rint(gray).astype(np.uint8)
    return np.stack([g, g, g], axis=-1)


def draw_grasps(rgb: np.ndarray, grasps: Sequence, open_width_px: float,
                regions: Sequence = ()) -> np.ndarray:
    """Draw region outlines and grasp jaws; the best grasp is red, others green."""
    out = rgb.copy()
    h, w = out.shape[:2]

    def put(rr, cc, color):
        ok = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
        out[rr[ok], cc[ok]] = color

    for x, y, rw, rh in regions:
        corners = [(y, x), (y, x + rw - 1), (y + rh - 1, x + rw - 1), (y + rh - 1, x)]
        for (r0, c0), (r1, c1) in zip(corners, corners[1:] + corners[:1]):
            put(*line(r0, c0, r1, c1), (80, 160, 255))
    for rank, g in reversed(list(enumerate(grasps))):
        color = (255, 40, 40) if rank == 0 else (60, 220, 60)
        th = math.radians(g.angle_deg)
        dx, dy = math.cos(th) * open_width_px / 2.0, -math.sin(th) * open_width_px / 2.0
        x, y = g.pos
        r0, c0 = int(round(y - dy)), int(round(x - dx))
        r1, c1 = int(round(y + dy)), int(round(x + dx))
        put(*line(r0, c0, r1, c1), color)
        for r, c in ((r0, c0), (r1, c1)):
            put(*disk((r, c), 3, shape=None), color)
    return out


def write_overlay_png(path, img: DepthImage, grasps: Sequence, open_width_px: float,
                      regions: Sequence = ()) -> None:
    Image.fromarray(draw_grasps(depth_preview(img), grasps, open_width_px, regions)).save(
        path, format="PNG")
