"""
Bin-picking planner: writhe gate, low-entanglement region search, per-region
grasp detection and ranking.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .depth import DepthImage
from .entanglement import MapConfig, generate_detailed, window_origins
from .errors import InvalidParams, NoGraspFound
from .gli import TopologyCoordinate
from .graspability import (
    GraspCandidate,
    GraspConfig,
    build_templates,
    detect_grasps,
    object_mask,
)

log = logging.getLogger(__name__)

TANGLE_AWARE = "tangle_aware"
DIRECT = "direct"


@dataclass(frozen=True)
class PlannerConfig:
    writhe_gate: float = 0.024  # 95th percentile over separated scenes, see calibrate_writhe_gate
    region_window_px: Optional[Tuple[int, int]] = None  # default: entanglement map window
    regions_k: int = 5
    top_k_per_region: int = 5
    rank_alpha: float = 0.7
    require_support: bool = True  # skip windows without object pixels
    map: MapConfig = MapConfig()
    grasp: GraspConfig = GraspConfig()

    def __post_init__(self):
        if self.regions_k < 1:
            raise InvalidParams("regions_k must be >= 1")
        if not 0.0 <= self.rank_alpha <= 1.0:
            raise InvalidParams("rank_alpha must lie in [0, 1]")


@dataclass(eq=False)
class PlanResult:
    gate_taken: str
    coordinate: TopologyCoordinate
    map: Optional[np.ndarray]
    candidates: List[GraspCandidate]
    regions: List[Tuple[int, int, int, int]] = field(default_factory=list)
    n_segments: int = 0
    matrix: Optional[np.ndarray] = None
    weights: Optional[tuple] = None
    elapsed_s: float = 0.0

    @property
    def best(self) -> Optional[GraspCandidate]:
        return self.candidates[0] if self.candidates else None


def _window_means(values: np.ndarray, window_px, stride_px):
    h, w = values.shape
    ox = window_origins(w, window_px[0], stride_px[0])
    oy = window_origins(h, window_px[1], stride_px[1])
    integral = np.pad(values.astype(float), ((1, 0), (1, 0))).cumsum(0).cumsum(1)
    ww, wh = window_px
    Y, X = np.meshgrid(oy, ox, indexing="ij")
    sums = integral[Y + wh, X + ww] - integral[Y, X + ww] - integral[Y + wh, X] + integral[Y, X]
    return ox, oy, sums / float(ww * wh)


def select_regions(emap: np.ndarray, window_px, k: int, stride_px=None,
                   support: Optional[np.ndarray] = None) -> List[Tuple[int, int, int, int]]:
    """The ``k`` windows with the smallest mean map value.

    Windows lie on the half-overlapping sliding grid.  A picked window
    suppresses any window overlapping it by more than half its area; ties go
    to row-major order.  With ``support`` the mean runs over support pixels
    only and windows without any are skipped, so empty floor does not make a
    window look calm.  Returns (x, y, w, h) rectangles in pick order.
    """
    window_px = (int(window_px[0]), int(window_px[1]))
    if stride_px is None:
        stride_px = (max(1, window_px[0] // 2), max(1, window_px[1] // 2))
    ox, oy, means = _window_means(emap, window_px, stride_px)
    ny, nx = means.shape
    eligible = np.ones((ny, nx), dtype=bool)
    if support is not None:
        sup = support.astype(float)
        _, _, filled = _window_means(sup, window_px, stride_px)
        _, _, on_support = _window_means(emap * sup, window_px, stride_px)
        eligible = filled > 0
        means = np.where(eligible, on_support / np.where(eligible, filled, 1.0), np.inf)
    rr, cc = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    # rounding absorbs summation noise so equal windows tie exactly
    order = np.lexsort((cc.ravel(), rr.ravel(), np.round(means, 9).ravel()))
    ww, wh = window_px
    picked: List[Tuple[int, int, int, int]] = []
    for idx in order:
        r, c = divmod(int(idx), nx)
        if not eligible[r, c]:
            continue
        x, y = int(ox[c]), int(oy[r])
        clash = False
        for px, py, _, _ in picked:
            ix = max(0, min(x, px) + ww - max(x, px))
            iy = max(0, min(y, py) + wh - max(y, py))
            if ix * iy > 0.5 * ww * wh:
                clash = True
                break
        if clash:
            continue
        picked.append((x, y, ww, wh))
        if len(picked) >= k:
            break
    return picked


def rank(cands: Sequence[GraspCandidate], alpha: float,
         normalize: bool = True) -> List[GraspCandidate]:
    """Order candidates by alpha * (1 - entanglement) + (1 - alpha) * graspability.

    With ``normalize`` the graspability is min-max normalized over the set
    first (all ones when constant); without it the stored values are taken
    as already normalized.  Scores are written into the candidates.  Ties go
    to lower entanglement, then smaller row, then smaller column.
    """
    cands = list(cands)
    if not cands:
        return []
    g = np.array([c.graspability for c in cands], dtype=float)
    if normalize:
        lo, hi = g.min(), g.max()
        g = (g - lo) / (hi - lo) if hi > lo else np.ones_like(g)
    for c, gi in zip(cands, g):
        c.score = float(alpha * (1.0 - c.entanglement) + (1.0 - alpha) * gi)
    return sorted(cands, key=lambda c: (-c.score, c.entanglement, c.pos[1], c.pos[0]))


def _support_mask(img: DepthImage, cfg: GraspConfig) -> np.ndarray:
    """Valid pixels standing above the floor (anything a region could grasp)."""
    if not img.valid.any():
        return np.zeros(img.depth.shape, dtype=bool)
    clearance = cfg.floor_clearance_mm if cfg.floor_clearance_mm is not None else 0.0
    floor = float(np.percentile(img.depth[img.valid], cfg.floor_percentile))
    return object_mask(img, floor - clearance, cfg.open_px)


def plan(img: DepthImage, cfg: PlannerConfig = PlannerConfig()) -> PlanResult:
    """Plan top-down grasps on one depth image.

    Raises :class:`NoGraspFound` (carrying the partial result) when no region
    yields a collision-free candidate.
    """
    t0 = time.perf_counter()
    detail = generate_detailed(img, cfg.map)
    coord = detail.coordinate
    templates = build_templates(cfg.grasp.hand, cfg.grasp.rotations)
    matrix = detail.matrix.values if detail.matrix is not None else None
    if coord.writhe <= cfg.writhe_gate:
        log.info("writhe %.4f <= gate %.4f: direct grasp detection", coord.writhe, cfg.writhe_gate)
        cands, _, _ = detect_grasps(img, cfg.grasp, None, templates)
        ranked = rank(cands, 0.0)
        result = PlanResult(DIRECT, coord, None, ranked, [], len(detail.segments), matrix,
                            None, 0.0)
    else:
        log.info("writhe %.4f > gate %.4f: tangle-aware planning", coord.writhe, cfg.writhe_gate)
        emap = detail.map
        window = cfg.region_window_px or cfg.map.window_for(img.dims)
        support = _support_mask(img, cfg.grasp) if cfg.require_support else None
        regions = select_regions(emap, window, cfg.regions_k, support=support)
        cands: List[GraspCandidate] = []
        grasp_cfg = replace(cfg.grasp, top_k=cfg.top_k_per_region)
        for region in regions:
            found, _, _ = detect_grasps(img, grasp_cfg, region, templates)
            log.debug("region %s: %d candidates", region, len(found))
            for c in found:
                r, col = c.pixel
                c.entanglement = float(emap[r, col])
            cands.extend(found)
        ranked = rank(_dedupe(cands), cfg.rank_alpha)
        result = PlanResult(TANGLE_AWARE, coord, emap, ranked, regions, len(detail.segments),
                            matrix, detail.weights.as_tuple(), 0.0)
    result.elapsed_s = time.perf_counter() - t0
    if not result.candidates:
        raise NoGraspFound("no collision-free grasp candidate found", result)
    return result


def _dedupe(cands: List[GraspCandidate]) -> List[GraspCandidate]:
    # overlapping regions can report the same pose twice
    seen: Dict[tuple, GraspCandidate] = {}
    for c in cands:
        key = (c.pos, c.rotation_index)
        if key not in seen or c.graspability > seen[key].graspability:
            seen[key] = c
    return list(seen.values())
