"""
Synthetic bin scenes of C- and S-shaped wire parts with ground truth.

Parts are tubes swept along planar centerlines.  Scenes are composed in
camera coordinates (x right, y down, z away from the camera) above a flat
floor, rendered with a z-buffer of swept spheres, and labelled with
per-part masks, projected centerline crossings and entanglement labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .depth import DepthImage, Intrinsics, project
from .errors import InvalidParams, PlacementFailed
from .gli import linking_number, segment_distance

FLOOR_MM = 1000.0
PLACEMENTS = ("separated", "overlapped", "twisted", "random_pile", "twisted_plus_free")

# parameter ranges sampled when a key is not given explicitly
_C_DEFAULTS = {"radius": (32.0, 40.0), "arc_deg": (300.0, 300.0)}
_S_DEFAULTS = {"radius": (20.0, 25.0), "arc_deg": (200.0, 230.0),
               "radius2": (20.0, 25.0), "arc2_deg": (200.0, 230.0)}


@dataclass(frozen=True)
class Camera:
    width: int = 512
    height: int = 512
    focal: float = 1000.0

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics.centered(self.width, self.height, self.focal)

    @property
    def dims(self):
        return (self.width, self.height)

    def floor_half_extent(self, floor_mm: float = FLOOR_MM):
        """Half size (x, y) in mm of the floor area seen by the camera."""
        return (self.width / 2.0 * floor_mm / self.focal,
                self.height / 2.0 * floor_mm / self.focal)


@dataclass(frozen=True)
class Arc:
    """Circular arc in the part's local xy-plane; negative sweep is clockwise."""

    center: Tuple[float, float]
    radius: float
    start: float
    sweep: float

    @property
    def length(self) -> float:
        return abs(self.sweep) * self.radius

    def point(self, s):
        """Point at arc length ``s`` from the arc start (local coordinates)."""
        ang = self.start + np.sign(self.sweep) * np.asarray(s, dtype=float) / self.radius
        return np.stack([self.center[0] + self.radius * np.cos(ang),
                         self.center[1] + self.radius * np.sin(ang),
                         np.zeros_like(ang)], axis=-1)


@dataclass(eq=False)
class WirePart:
    shape: str
    local_centerline: np.ndarray
    wire_radius: float
    arcs: Tuple[Arc, ...]
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if len(self.local_centerline) < 8:
            raise InvalidParams("centerline needs at least 8 points")
        if not self.wire_radius > 0:
            raise InvalidParams("wire radius must be positive")

    @property
    def centerline(self) -> np.ndarray:
        return self.local_centerline @ self.rotation.T + self.translation

    def to_world(self, local_points) -> np.ndarray:
        return np.asarray(local_points) @ self.rotation.T + self.translation

    def posed(self, rotation=None, translation=None) -> "WirePart":
        """Copy with an extra rigid motion applied after the current pose."""
        R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        t = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        return WirePart(self.shape, self.local_centerline, self.wire_radius, self.arcs,
                        R @ self.rotation, R @ self.translation + t)

    def with_pose(self, rotation, translation) -> "WirePart":
        return WirePart(self.shape, self.local_centerline, self.wire_radius, self.arcs,
                        np.asarray(rotation, dtype=float), np.asarray(translation, dtype=float))

    def arc_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.local_centerline, axis=0), axis=1).sum())


@dataclass
class Crossing:
    part_i: int
    part_j: int
    pixel_pos: Tuple[float, float]
    top_part: int
    is_entangling: bool


@dataclass(eq=False)
class SceneTruth:
    parts: List[WirePart]
    placement: str
    crossings: List[Crossing]
    entangled_pairs: List[Tuple[int, int]]
    free_part_ids: List[int]
    linking: Dict[Tuple[int, int], float]
    floor_mm: float = FLOOR_MM


@dataclass(eq=False)
class Rendering:
    image: DepthImage
    labels: np.ndarray  # part index per pixel, -1 on the floor
    silhouettes: List[Tuple[int, np.ndarray]]  # (part id, (k, 2) pixel polyline)
    n_parts: int = 0

    @property
    def part_masks(self) -> np.ndarray:
        return np.stack([self.labels == k for k in range(self.n_parts)]) if self.n_parts \
            else np.zeros((0,) + self.labels.shape, bool)

    def mask_of(self, part_ids: Sequence[int]) -> np.ndarray:
        return np.isin(self.labels, list(part_ids)) if len(part_ids) else np.zeros(self.labels.shape, bool)


# ---------------------------------------------------------------------------
# Parts
# ---------------------------------------------------------------------------


def _resolve(params, defaults, rng):
    out = {}
    for key, (lo, hi) in defaults.items():
        out[key] = float(params[key]) if key in params else float(rng.uniform(lo, hi))
    return out


def make_part(shape: str, params: Optional[dict] = None, seed: int = 0) -> WirePart:
    """Build a C (single arc) or S (two opposed arcs) wire part.

    Keys in ``params``: radius, arc_deg, radius2, arc2_deg (S only),
    wire_radius (default 5 mm), spacing (centerline resolution, default 1 mm).
    Missing geometric keys are drawn from fixed ranges with ``seed``.
    """
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    shape = shape.upper()
    if shape == "C":
        p = _resolve(params, _C_DEFAULTS, rng)
        p["radius2"], p["arc2_deg"] = p["radius"], 0.0
    elif shape == "S":
        p = _resolve(params, _S_DEFAULTS, rng)
    else:
        raise InvalidParams(f"unknown shape {shape!r}")
    wire_radius = float(params.get("wire_radius", 5.0))
    spacing = float(params.get("spacing", 1.0))
    r1, r2 = p["radius"], p["radius2"]
    a1, a2 = math.radians(p["arc_deg"]), math.radians(p["arc2_deg"])
    if not (r1 > 0 and r2 > 0 and spacing > 0 and wire_radius > 0):
        raise InvalidParams("radii, spacing and wire radius must be positive")
    if not (0 < a1 <= 2 * math.pi and 0 <= a2 <= 2 * math.pi):
        raise InvalidParams("arc angles must lie in (0, 360] degrees")
    if wire_radius >= min(r1, r2 if a2 > 0 else r1):
        raise InvalidParams("wire radius must be smaller than the arc radius")

    first = Arc((0.0, 0.0), r1, -a1 / 2.0, a1)
    arcs = [first]
    if a2 > 0:
        end = first.point(first.length)[:2]
        c2 = end + r2 * end / r1
        arcs.append(Arc((float(c2[0]), float(c2[1])), r2, -a1 / 2.0 + a1 + math.pi, -a2))
    total = sum(a.length for a in arcs)
    n = max(8, int(math.ceil(total / spacing)) + 1)
    s = np.linspace(0.0, total, n)
    pts = np.empty((n, 3))
    on_first = s <= first.length
    pts[on_first] = first.point(s[on_first])
    if len(arcs) > 1:
        pts[~on_first] = arcs[1].point(s[~on_first] - first.length)
    return WirePart(shape, pts, wire_radius, tuple(arcs))


# ---------------------------------------------------------------------------
# Geometry helpers
# ---------------------------------------------------------------------------


def centerline_distance(a: WirePart, b: WirePart) -> float:
    """Minimum distance between two part centerlines."""
    pa, pb = a.centerline, b.centerline
    d = segment_distance(pa[:-1, None], pa[1:, None], pb[None, :-1], pb[None, 1:])
    return float(d.min())


def closure_linking(a: WirePart, b: WirePart) -> float:
    """Linking number of the two centerlines closed by their end-to-end chords."""
    return linking_number(a.centerline, b.centerline)


def _crossings_2d(pa: np.ndarray, pb: np.ndarray):
    """Intersections of two 2D polylines: list of (point, index_a, index_b)."""
    a0, a1 = pa[:-1, None], pa[1:, None]
    b0, b1 = pb[None, :-1], pb[None, 1:]
    da, db = a1 - a0, b1 - b0
    denom = da[..., 0] * db[..., 1] - da[..., 1] * db[..., 0]
    w = b0 - a0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (w[..., 0] * db[..., 1] - w[..., 1] * db[..., 0]) / denom
        t = (w[..., 0] * da[..., 1] - w[..., 1] * da[..., 0]) / denom
    hit = (denom != 0) & (s >= 0) & (s < 1) & (t >= 0) & (t < 1)
    ii, jj = np.nonzero(hit)
    pts = a0[ii, 0] + s[ii, jj, None] * da[ii, 0]
    return [(pts[k], int(ii[k]), int(jj[k]), float(s[ii[k], jj[k]]), float(t[ii[k], jj[k]]))
            for k in range(len(ii))]


def projected_crossings(a: WirePart, b: WirePart, intr: Intrinsics):
    """Crossings of the projected centerlines with the nearer part at each."""
    ca, cb = a.centerline, b.centerline
    out = []
    for pt, i, j, s, t in _crossings_2d(project(ca, intr), project(cb, intr)):
        za = ca[i, 2] + s * (ca[i + 1, 2] - ca[i, 2])
        zb = cb[j, 2] + t * (cb[j + 1, 2] - cb[j, 2])
        out.append((pt, 0 if za < zb else 1))
    return out


def _aabb(part: WirePart, pad: float):
    c = part.centerline
    return c.min(axis=0) - part.wire_radius - pad, c.max(axis=0) + part.wire_radius + pad


def _aabb_disjoint(a, b) -> bool:
    return bool(np.any(a[1] < b[0]) or np.any(b[1] < a[0]))


def _drop(parts: Sequence[WirePart], floor_mm: float) -> List[WirePart]:
    """Translate a group along z so its lowest tube surface touches the floor."""
    deepest = max(float((p.centerline[:, 2] + p.wire_radius).max()) for p in parts)
    shift = np.array([0.0, 0.0, floor_mm - deepest])
    return [p.posed(translation=shift) for p in parts]


def _shift_xy(parts: Sequence[WirePart], xy) -> List[WirePart]:
    center = np.mean(np.concatenate([p.centerline for p in parts]), axis=0)
    shift = np.array([xy[0] - center[0], xy[1] - center[1], 0.0])
    return [p.posed(translation=shift) for p in parts]


def _random_tilt(rng, max_deg: float) -> np.ndarray:
    axis_angle = rng.uniform(0, 2 * math.pi)
    tilt = math.radians(rng.uniform(0, max_deg))
    axis = np.array([math.cos(axis_angle), math.sin(axis_angle), 0.0])
    return Rotation.from_rotvec(axis * tilt).as_matrix()


def _flat_pose(part: WirePart, rng, max_tilt_deg: float) -> WirePart:
    yaw = Rotation.from_rotvec([0.0, 0.0, rng.uniform(0, 2 * math.pi)]).as_matrix()
    center = part.local_centerline.mean(axis=0)
    R = _random_tilt(rng, max_tilt_deg) @ yaw
    return part.with_pose(R, -R @ center)


def _group_extent(parts) -> np.ndarray:
    pts = np.concatenate([p.centerline for p in parts])
    r = max(p.wire_radius for p in parts)
    return (pts.max(axis=0) - pts.min(axis=0))[:2] / 2.0 + r


def _random_xy(rng, camera: Camera, floor_mm: float, extent, margin: float):
    hx, hy = camera.floor_half_extent(floor_mm)
    lim_x = hx - extent[0] - margin
    lim_y = hy - extent[1] - margin
    if lim_x <= 0 or lim_y <= 0:
        raise PlacementFailed("part does not fit in the camera footprint")
    return rng.uniform(-lim_x, lim_x), rng.uniform(-lim_y, lim_y)


# ---------------------------------------------------------------------------
# Placements
# ---------------------------------------------------------------------------


def _thread(a: WirePart, b: WirePart, rng) -> Tuple[WirePart, WirePart]:
    """Pose ``b`` so one of its arcs passes through the loop of ``a``'s arc.

    ``a`` lies in the local xy-plane; ``b``'s arc circle is centered on a
    point of ``a``'s wire and tilted 45-90 degrees out of ``a``'s plane, so it
    pierces ``a``'s spanning disk once inside and once outside the loop.
    """
    arc_a = a.arcs[0]
    margin = min(math.radians(50.0), abs(arc_a.sweep) / 3.0)
    phi = arc_a.start + rng.uniform(margin, abs(arc_a.sweep) - margin) * np.sign(arc_a.sweep)
    ca = np.array([arc_a.center[0], arc_a.center[1], 0.0])
    u = np.array([math.cos(phi), math.sin(phi), 0.0])
    n_a = np.array([0.0, 0.0, 1.0])
    t_a = np.cross(n_a, u)
    P = ca + arc_a.radius * u

    k = int(rng.integers(len(b.arcs)))
    arc_b = b.arcs[k]
    beta = math.radians(rng.uniform(45.0, 90.0)) * (1 if rng.random() < 0.5 else -1)
    v = math.cos(beta) * t_a + math.sin(beta) * n_a
    # local angle of b's arc placed inside a's loop, away from b's ends
    span = abs(arc_b.sweep)
    frac = rng.uniform(0.3, 0.7)
    alpha_in = arc_b.start + np.sign(arc_b.sweep) * frac * span
    delta = math.pi - alpha_in
    e1 = math.cos(delta) * u + math.sin(delta) * v
    e2 = -math.sin(delta) * u + math.cos(delta) * v
    # arc radius may differ from a's; keep b's circle center on a's wire
    R = np.stack([e1, e2, np.cross(e1, e2)], axis=1)
    cb = np.array([arc_b.center[0], arc_b.center[1], 0.0])
    t = P - R @ cb
    return a.with_pose(np.eye(3), np.zeros(3)), b.with_pose(R, t)


def _twisted_pair(a: WirePart, b: WirePart, rng, floor_mm: float, max_attempts: int):
    min_gap = 2 * max(a.wire_radius, b.wire_radius) + 1.0
    for _ in range(max_attempts):
        a0 = a.with_pose(np.eye(3), np.zeros(3))
        a1, b1 = _thread(a0, b, rng)
        if centerline_distance(a1, b1) <= min_gap:
            continue
        if abs(abs(closure_linking(a1, b1)) - 1.0) > 1e-3:
            continue
        # random yaw for the assembly and a modest tilt of the whole group
        R = _random_tilt(rng, 20.0) @ Rotation.from_rotvec(
            [0.0, 0.0, rng.uniform(0, 2 * math.pi)]).as_matrix()
        # flip half of the time so either part can be on top
        if rng.random() < 0.5:
            R = Rotation.from_rotvec([math.pi, 0.0, 0.0]).as_matrix() @ R
        pair = [p.posed(rotation=R) for p in (a1, b1)]
        return _drop(pair, floor_mm)
    raise PlacementFailed("could not thread the parts")


def _rest_on(top: WirePart, bottom: WirePart, gap: float) -> WirePart:
    """Lift ``top`` (toward the camera) until it clears ``bottom`` by ``gap``."""
    lo, hi = 0.0, 10.0 * (top.wire_radius + bottom.wire_radius) + 50.0
    if centerline_distance(top, bottom) >= gap:
        return top
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if centerline_distance(top.posed(translation=[0, 0, -mid]), bottom) >= gap:
            hi = mid
        else:
            lo = mid
    return top.posed(translation=[0, 0, -hi])


def _place_overlapped(parts, rng, camera, floor_mm, max_attempts):
    for _ in range(max_attempts):
        base = _drop([_flat_pose(parts[0], rng, 3.0)], floor_mm)[0]
        placed = [base]
        ok = True
        for part in parts[1:]:
            prev = placed[-1]
            top = _drop([_flat_pose(part, rng, 5.0)], floor_mm)[0]
            ang = rng.uniform(0, 2 * math.pi)
            dist = rng.uniform(0.4, 0.9) * float(_group_extent([prev]).max())
            target = prev.centerline.mean(axis=0)[:2] + dist * np.array([math.cos(ang), math.sin(ang)])
            top = _shift_xy([top], target)[0]
            top = _rest_on(top, prev, 2 * max(top.wire_radius, prev.wire_radius) + 0.5)
            if len(projected_crossings(top, prev, camera.intrinsics)) == 0:
                ok = False
                break
            placed.append(top)
        if not ok:
            continue
        xy = _random_xy(rng, camera, floor_mm, _group_extent(placed), 5.0)
        placed = _shift_xy(placed, xy)
        if all(abs(closure_linking(placed[i], placed[i + 1])) < 0.5 for i in range(len(placed) - 1)):
            return placed
    raise PlacementFailed("could not overlap the parts")


def _place_separated(groups, rng, camera, floor_mm, margin, max_attempts):
    """Scatter groups of parts so their padded bounding boxes are disjoint."""
    placed: List[List[WirePart]] = []
    for group in groups:
        for _ in range(max_attempts):
            xy = _random_xy(rng, camera, floor_mm, _group_extent(group), 5.0)
            cand = _shift_xy(group, xy)
            boxes = [_aabb(p, margin / 2.0) for p in cand]
            if all(_aabb_disjoint(bx, _aabb(q, margin / 2.0))
                   for g in placed for q in g for bx in boxes):
                placed.append(cand)
                break
        else:
            raise PlacementFailed("could not separate the parts")
    return [p for g in placed for p in g]


def _place_pile(parts, rng, camera, floor_mm, max_attempts):
    placed: List[WirePart] = []
    spread = 0.35 * min(camera.floor_half_extent(floor_mm))
    for part in parts:
        for _ in range(max_attempts):
            R = Rotation.random(random_state=rng).as_matrix()
            center = part.local_centerline.mean(axis=0)
            cand = _drop([part.with_pose(R, -R @ center)], floor_mm)[0]
            xy = rng.uniform(-spread, spread, size=2)
            cand = _shift_xy([cand], xy)[0].posed(translation=[0, 0, -rng.uniform(0, 40.0)])
            if all(centerline_distance(cand, q) > 2 * max(cand.wire_radius, q.wire_radius)
                   for q in placed):
                placed.append(cand)
                break
        else:
            raise PlacementFailed("could not build the pile")
    return placed


def compose_scene(parts: Sequence[WirePart], placement: str, seed: int = 0,
                  camera: Camera = Camera(), floor_mm: float = FLOOR_MM,
                  margin_mm: float = 15.0, max_attempts: int = 500) -> SceneTruth:
    """Pose parts according to ``placement`` and label the result.

    ``twisted_plus_free`` threads the first two parts and scatters the rest
    away from them, giving one tangled region and free parts elsewhere.
    """
    if len(parts) < 1:
        raise InvalidParams("need at least one part")
    if placement not in PLACEMENTS:
        raise InvalidParams(f"unknown placement {placement!r}")
    rng = np.random.default_rng(seed)
    parts = list(parts)
    if placement == "separated":
        groups = [[_drop([_flat_pose(p, rng, 8.0)], floor_mm)[0]] for p in parts]
        posed = _place_separated(groups, rng, camera, floor_mm, margin_mm, max_attempts)
    elif placement == "overlapped":
        posed = _place_overlapped(parts, rng, camera, floor_mm, max_attempts)
    elif placement in ("twisted", "twisted_plus_free"):
        if len(parts) < 2:
            raise InvalidParams("twisting needs two parts")
        pair = _twisted_pair(parts[0], parts[1], rng, floor_mm, max_attempts)
        groups = [pair] + [[_drop([_flat_pose(p, rng, 8.0)], floor_mm)[0]] for p in parts[2:]]
        if placement == "twisted" and len(parts) == 2:
            xy = _random_xy(rng, camera, floor_mm, _group_extent(pair), 5.0)
            posed = _shift_xy(pair, xy)
        else:
            posed = _place_separated(groups, rng, camera, floor_mm, margin_mm, max_attempts)
    else:
        posed = _place_pile(parts, rng, camera, floor_mm, max_attempts)
    return label_scene(posed, placement, camera, floor_mm)


def label_scene(parts: List[WirePart], placement: str, camera: Camera = Camera(),
                floor_mm: float = FLOOR_MM) -> SceneTruth:
    """Crossings, linking numbers and entanglement labels for posed parts.

    A pair is entangling when its closure-completed linking number is
    non-zero, or when the wires come within three wire radii of each other
    and cross at least twice in projection (hooked but unlinked).
    """
    intr = camera.intrinsics
    crossings: List[Crossing] = []
    entangled: List[Tuple[int, int]] = []
    linking: Dict[Tuple[int, int], float] = {}
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            a, b = parts[i], parts[j]
            lk = closure_linking(a, b)
            linking[(i, j)] = lk
            cross = projected_crossings(a, b, intr)
            close = centerline_distance(a, b) < 3 * max(a.wire_radius, b.wire_radius)
            tangled = abs(lk) > 0.5 or (close and len(cross) >= 2)
            if tangled:
                entangled.append((i, j))
            for pt, top in cross:
                crossings.append(Crossing(i, j, (float(pt[0]), float(pt[1])),
                                          i if top == 0 else j, tangled))
    involved = {k for pair in entangled for k in pair}
    free = [k for k in range(len(parts)) if k not in involved]
    return SceneTruth(parts, placement, crossings, entangled, free, linking, floor_mm)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _resample(polyline: np.ndarray, step: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(polyline, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(2, int(math.ceil(s[-1] / step)) + 1)
    q = np.linspace(0.0, s[-1], n)
    return np.stack([np.interp(q, s, polyline[:, k]) for k in range(3)], axis=1)


def _render_spheres(centers: np.ndarray, radius: float, intr: Intrinsics, width: int, height: int):
    """Per-pixel nearest z of a union of equal spheres (inf where missed)."""
    zbuf = np.full(height * width, np.inf)
    uv = project(centers, intr)
    near = centers[:, 2] - radius
    reach = int(math.ceil(float(np.max(max(intr.fx, intr.fy) * radius / near)))) + 2
    off = np.arange(-reach, reach + 1)
    du, dv = np.meshgrid(off, off)
    u = np.rint(uv[:, 0])[:, None] + du.ravel()[None, :]
    v = np.rint(uv[:, 1])[:, None] + dv.ravel()[None, :]
    dx = (u - intr.cx) / intr.fx
    dy = (v - intr.cy) / intr.fy
    c = centers[:, None, :]
    b = dx * c[..., 0] + dy * c[..., 1] + c[..., 2]
    a = dx * dx + dy * dy + 1.0
    cc = np.sum(centers * centers, axis=1)[:, None] - radius * radius
    disc = b * b - a * cc
    inside = (u >= 0) & (u < width) & (v >= 0) & (v < height) & (disc >= 0)
    z = (b[inside] - np.sqrt(disc[inside])) / a[inside]
    idx = (v[inside] * width + u[inside]).astype(np.int64)
    np.minimum.at(zbuf, idx, z)
    return zbuf.reshape(height, width)


def silhouette_polylines(part: WirePart, intr: Intrinsics, cap_points: int = 9):
    """Projected outline of the tube: both flanks plus the two end caps."""
    c = part.centerline
    tang = np.gradient(c, axis=0)
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    view = c / np.linalg.norm(c, axis=1, keepdims=True)
    side = np.cross(tang, view)
    side /= np.linalg.norm(side, axis=1, keepdims=True)
    r = part.wire_radius
    lines = [project(c + r * side, intr), project(c - r * side, intr)]
    closed = np.linalg.norm(c[0] - c[-1]) < 1e-6
    if not closed:
        th = np.linspace(-math.pi / 2, math.pi / 2, cap_points)[:, None]
        for idx, out in ((0, -tang[0]), (-1, tang[-1])):
            cap = c[idx] + r * (np.cos(th) * out + np.sin(th) * side[idx])
            lines.append(project(cap, intr))
    return lines


def render_depth(scene: SceneTruth, camera: Camera = Camera(), noise_sigma: float = 1.0,
                 border_px: int = 0, seed: int = 0) -> Rendering:
    """Z-buffer the scene's tubes over the floor and add sensor effects."""
    intr = camera.intrinsics
    w, h = camera.dims
    depth = np.full((h, w), float(scene.floor_mm))
    labels = np.full((h, w), -1, dtype=np.int32)
    silhouettes = []
    for k, part in enumerate(scene.parts):
        centers = _resample(part.centerline, part.wire_radius / 4.0)
        z = _render_spheres(centers, part.wire_radius, intr, w, h)
        nearer = z < depth
        depth[nearer] = z[nearer]
        labels[nearer] = k
        silhouettes.extend((k, line) for line in silhouette_polylines(part, intr))
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        depth = depth + rng.normal(0.0, noise_sigma, size=depth.shape)
    valid = np.ones((h, w), dtype=bool)
    if border_px > 0:
        valid[:border_px] = valid[-border_px:] = False
        valid[:, :border_px] = valid[:, -border_px:] = False
    return Rendering(DepthImage(depth, valid, intr), labels, silhouettes, len(scene.parts))


# ---------------------------------------------------------------------------
# Scene recipes
# ---------------------------------------------------------------------------

PATTERNS = {"C": ("C", "C", "C"), "S": ("S", "S", "S"), "mixed": ("C", "S", "C")}


def make_scene(placement: str, pattern: str = "C", n_parts: int = 2, seed: int = 0,
               camera: Camera = Camera(), noise_sigma: float = 1.0,
               part_params: Optional[dict] = None) -> Tuple[SceneTruth, Rendering]:
    """Generate and render one scene; shapes cycle through ``PATTERNS[pattern]``."""
    rng = np.random.default_rng(seed)
    shapes = PATTERNS[pattern]
    parts = [make_part(shapes[k % len(shapes)], part_params, int(rng.integers(2**31)))
             for k in range(n_parts)]
    scene = compose_scene(parts, placement, int(rng.integers(2**31)), camera)
    rendering = render_depth(scene, camera, noise_sigma, seed=int(rng.integers(2**31)))
    return scene, rendering
