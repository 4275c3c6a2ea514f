"""
Gaussian link integral between straight segments, the writhe matrix built
from it, and the topology coordinate (writhe, density, center) derived from
that matrix.

The closed form follows Klenin & Langowski (2000): the link integral of two
straight segments is the signed solid angle of the quadrangle spanned by
their four endpoints, divided by 4*pi.  A midpoint-rule evaluation of the
double line integral is provided separately and is only used as a test
oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from numba import njit
from scipy import ndimage
from skimage.draw import line as draw_line

from .errors import (
    AllZeroMatrix,
    DegenerateSegment,
    NearSingular,
    TooFewSegments,
)

EPS_LEN = 1.0  # mm
EPS_INT = 1e-9  # mm
# |GLI| of one segment pair never exceeds this; used for near-touching pairs
GLI_SATURATION = 0.5


@dataclass(eq=False)
class Segment3D:
    """Oriented straight segment in camera coordinates (mm).

    ``pixel_p0``/``pixel_p1`` hold the image footprint (u, v) when the
    segment was extracted from a depth image; they are ``None`` for purely
    geometric segments.
    """

    p0: np.ndarray
    p1: np.ndarray
    pixel_p0: Optional[np.ndarray] = None
    pixel_p1: Optional[np.ndarray] = None
    min_length: float = field(default=EPS_LEN, repr=False)

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float).reshape(3)
        self.p1 = np.asarray(self.p1, dtype=float).reshape(3)
        if self.pixel_p0 is not None:
            self.pixel_p0 = np.asarray(self.pixel_p0, dtype=float).reshape(2)
        if self.pixel_p1 is not None:
            self.pixel_p1 = np.asarray(self.pixel_p1, dtype=float).reshape(2)
        if not self.length > self.min_length:
            raise DegenerateSegment(
                f"segment length {self.length:.3g} <= {self.min_length:g}"
            )

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.p1 - self.p0))

    @property
    def vector(self) -> np.ndarray:
        return self.p1 - self.p0


@dataclass(eq=False)
class WritheMatrix:
    """Strictly upper-triangular store of pairwise |GLI| values."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def nonzero_values(self) -> np.ndarray:
        return self.values[self.values > 0]


@dataclass(frozen=True)
class TopologyCoordinate:
    writhe: float
    density: float
    center: Optional[Tuple[int, int]]
    n_segments: int = 0

    @classmethod
    def empty(cls, n_segments: int = 0) -> "TopologyCoordinate":
        return cls(0.0, 0.0, None, n_segments)


# ---------------------------------------------------------------------------
# Pairwise geometry (vectorized over leading axes)
# ---------------------------------------------------------------------------


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _angle(a, b):
    # Well conditioned near 0 and pi, unlike acos/asin of normalized dots.
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), _dot(a, b))


def segment_distance(p0, p1, q0, q1):
    """Minimum distance between segments ``p0-p1`` and ``q0-q1``.

    Works on arrays of shape (..., 3); returns shape (...).
    """
    p0, p1, q0, q1 = (np.asarray(x, dtype=float) for x in (p0, p1, q0, q1))
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 1e-12 * a * e, np.clip((b * f - c * e) / denom, 0.0, 1.0), 0.0)
        t = (b * s + f) / e
        s = np.where(t < 0.0, np.clip(-c / a, 0.0, 1.0), s)
        s = np.where(t > 1.0, np.clip((b - c) / a, 0.0, 1.0), s)
        t = np.clip(t, 0.0, 1.0)
    closest_p = p0 + s[..., None] * d1
    closest_q = q0 + t[..., None] * d2
    return np.linalg.norm(closest_p - closest_q, axis=-1)


def _shares_endpoint(p0, p1, q0, q1, eps):
    out = np.zeros(np.broadcast_shapes(p0.shape, q0.shape)[:-1], dtype=bool)
    for a in (p0, p1):
        for b in (q0, q1):
            out |= np.linalg.norm(a - b, axis=-1) <= eps
    return out


def gli_closed_form(p0, p1, q0, q1):
    """Signed link integral of segment pairs via the solid-angle formula.

    No singularity handling: callers screen touching pairs first.  Arrays of
    shape (..., 3) broadcast against each other.
    """
    p0, p1, q0, q1 = (np.asarray(x, dtype=float) for x in (p0, p1, q0, q1))
    r12 = p1 - p0
    r34 = q1 - q0
    r13 = q0 - p0
    r14 = q1 - p0
    r23 = q0 - p1
    r24 = q1 - p1
    n1 = np.cross(r13, r14)
    n2 = np.cross(r14, r24)
    n3 = np.cross(r24, r23)
    n4 = np.cross(r23, r13)
    # sum of arcsin(n_k . n_k+1) over the quadrangle == 2*pi - sum of angles
    omega = 2.0 * np.pi - (
        _angle(n1, n2) + _angle(n2, n3) + _angle(n3, n4) + _angle(n4, n1)
    )
    sign = np.sign(_dot(np.cross(r34, r12), r13))
    return omega * sign / (4.0 * np.pi)


def gli_segments(a: Segment3D, b: Segment3D, eps_int: float = EPS_INT) -> float:
    """Signed Gaussian link integral of two straight segments.

    Segments that share an endpoint (neighbours on one polyline) are coplanar
    and return 0.  Otherwise a pair closer than ``eps_int`` raises
    :class:`NearSingular`.
    """
    for s in (a, b):
        if not s.length > s.min_length:
            raise DegenerateSegment(f"segment length {s.length:.3g}")
    if _shares_endpoint(a.p0, a.p1, b.p0, b.p1, eps_int):
        return 0.0
    dist = float(segment_distance(a.p0, a.p1, b.p0, b.p1))
    if dist <= eps_int:
        raise NearSingular(f"segments are {dist:.3g} mm apart")
    # the integral is symmetric; a canonical argument order makes the
    # floating-point result symmetric too
    if tuple(np.concatenate([b.p0, b.p1])) < tuple(np.concatenate([a.p0, a.p1])):
        a, b = b, a
    return float(gli_closed_form(a.p0, a.p1, b.p0, b.p1))


@njit(cache=True, fastmath=True)
def _inverse_cube_midpoint_sum(w0, da, db, n, single_kernel):
    # sum_ij |w0 + s_i*da - t_j*db|^-3 over midpoint nodes s_i, t_j
    aa = da[0] * da[0] + da[1] * da[1] + da[2] * da[2]
    bb = db[0] * db[0] + db[1] * db[1] + db[2] * db[2]
    ab = da[0] * db[0] + da[1] * db[1] + da[2] * db[2]
    wa = w0[0] * da[0] + w0[1] * da[1] + w0[2] * da[2]
    wb = w0[0] * db[0] + w0[1] * db[1] + w0[2] * db[2]
    ww = w0[0] * w0[0] + w0[1] * w0[1] + w0[2] * w0[2]
    h = 1.0 / n
    t = (np.arange(n) + 0.5) * h
    tt = bb * t * t
    total = 0.0
    for i in range(n):
        s = (i + 0.5) * h
        c0 = ww + 2.0 * s * wa + s * s * aa
        c1 = -2.0 * (wb + s * ab)
        row = 0.0
        # written as a power so LLVM vectorizes the loop; the single precision
        # power doubles the lane count, sums stay in double
        if single_kernel:
            for j in range(n):
                row += np.float64(np.float32(c0 + c1 * t[j] + tt[j]) ** np.float32(-1.5))
        else:
            for j in range(n):
                row += (c0 + c1 * t[j] + tt[j]) ** -1.5
        total += row
    return total * h * h


def gli_quadrature(a: Segment3D, b: Segment3D, subdivisions: int = 4096,
                   eps_int: float = EPS_INT, single_kernel: bool = True) -> float:
    """Midpoint-rule evaluation of the double line integral (test oracle).

    On straight segments the numerator ``(dg1 x dg2) . (g1 - g2)`` is constant,
    so only ``|g1 - g2|^-3`` is summed over the ``subdivisions**2`` nodes.
    ``single_kernel`` evaluates that power in float32 (relative error about
    1e-8 on the integral, 2-3x faster); pass False for an all-double sum.
    """
    if subdivisions < 2:
        raise ValueError("subdivisions must be >= 2")
    for s in (a, b):
        if not s.length > s.min_length:
            raise DegenerateSegment(f"segment length {s.length:.3g}")
    if _shares_endpoint(a.p0, a.p1, b.p0, b.p1, eps_int):
        return 0.0
    if float(segment_distance(a.p0, a.p1, b.p0, b.p1)) <= eps_int:
        raise NearSingular("segments intersect")
    da = a.vector
    db = b.vector
    # relative coordinates keep the expanded quadratic well conditioned
    w0 = a.p0 - b.p0
    numerator = float(np.dot(np.cross(da, db), w0))
    if numerator == 0.0:
        return 0.0
    integral = _inverse_cube_midpoint_sum(w0, da, db, int(subdivisions), bool(single_kernel))
    return numerator * integral / (4.0 * np.pi)


# ---------------------------------------------------------------------------
# Writhe matrix and topology coordinate
# ---------------------------------------------------------------------------


def segment_arrays(segments: Sequence[Segment3D]) -> Tuple[np.ndarray, np.ndarray]:
    if len(segments) == 0:
        return np.zeros((0, 3)), np.zeros((0, 3))
    return (np.stack([s.p0 for s in segments]), np.stack([s.p1 for s in segments]))


def writhe_matrix_from_arrays(p0: np.ndarray, p1: np.ndarray,
                              eps_int: float = EPS_INT,
                              zero_tol: float = 0.0) -> WritheMatrix:
    """Writhe matrix of segments given as (n, 3) endpoint arrays.

    Every cell is computed independently, so the result does not depend on
    evaluation order.  Entries with |GLI| <= ``zero_tol`` are stored as 0.
    """
    n = len(p0)
    if n < 2:
        raise TooFewSegments(f"need at least 2 segments, got {n}")
    iu, ju = np.triu_indices(n, k=1)
    a0, a1, b0, b1 = p0[iu], p1[iu], p0[ju], p1[ju]
    adjacent = _shares_endpoint(a0, a1, b0, b1, eps_int)
    touching = ~adjacent & (segment_distance(a0, a1, b0, b1) <= eps_int)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.abs(gli_closed_form(a0, a1, b0, b1))
    vals = np.where(adjacent, 0.0, vals)
    vals = np.where(touching, GLI_SATURATION, vals)
    vals = np.nan_to_num(vals, nan=0.0)
    if zero_tol > 0:
        vals = np.where(vals <= zero_tol, 0.0, vals)
    values = np.zeros((n, n))
    values[iu, ju] = vals
    return WritheMatrix(values)


def writhe_matrix(segments: Sequence[Segment3D], eps_int: float = EPS_INT,
                  zero_tol: float = 0.0) -> WritheMatrix:
    """Pairwise |GLI| of a segment list; touching pairs saturate to 0.5."""
    if len(segments) < 2:
        raise TooFewSegments(f"need at least 2 segments, got {len(segments)}")
    p0, p1 = segment_arrays(segments)
    return writhe_matrix_from_arrays(p0, p1, eps_int=eps_int, zero_tol=zero_tol)


def writhe(T: WritheMatrix) -> float:
    """Sum of all stored entries divided by the number of segments."""
    if T.n == 0:
        return 0.0
    return float(T.values.sum() / T.n)


def density(T: WritheMatrix) -> float:
    """Fraction of non-zero entries strictly above their mean (0 if none)."""
    nz = T.nonzero_values()
    if nz.size == 0:
        return 0.0
    return float(np.count_nonzero(nz > nz.mean()) / nz.size)


def center(T: WritheMatrix) -> Tuple[int, int]:
    """Index pair at the mass centroid of T, snapped to the nearest non-zero cell.

    Ties in snapping distance go to the smaller row, then the smaller column.
    """
    ii, jj = np.nonzero(T.values > 0)
    if ii.size == 0:
        raise AllZeroMatrix("writhe matrix has no non-zero entry")
    w = T.values[ii, jj]
    ci = float(np.dot(w, ii) / w.sum())
    cj = float(np.dot(w, jj) / w.sum())
    d2 = (ii - ci) ** 2 + (jj - cj) ** 2
    k = np.lexsort((jj, ii, d2))[0]
    return int(ii[k]), int(jj[k])


def topology_coordinate(T: WritheMatrix) -> TopologyCoordinate:
    has_mass = bool(np.any(T.values > 0))
    return TopologyCoordinate(
        writhe=writhe(T),
        density=density(T),
        center=center(T) if has_mass else None,
        n_segments=T.n,
    )


def _disk(radius: int) -> np.ndarray:
    r = int(radius)
    y, x = np.mgrid[-r:r + 1, -r:r + 1]
    return x * x + y * y <= r * r


def center_mask(segments: Sequence[Segment3D], c: Tuple[int, int],
                image_dims: Tuple[int, int], dilation_px: int = 8) -> np.ndarray:
    """Binary (h, w) mask of the two center segments, dilated by a disk.

    ``image_dims`` is (width, height); segments must carry pixel footprints.
    """
    width, height = image_dims
    mask = np.zeros((height, width), dtype=bool)
    for idx in c:
        seg = segments[idx]
        u0, v0 = np.rint(seg.pixel_p0).astype(int)
        u1, v1 = np.rint(seg.pixel_p1).astype(int)
        rr, cc = draw_line(v0, u0, v1, u1)
        keep = (rr >= 0) & (rr < height) & (cc >= 0) & (cc < width)
        mask[rr[keep], cc[keep]] = True
    if dilation_px > 0:
        mask = ndimage.binary_dilation(mask, structure=_disk(dilation_px))
    return mask


def polygon_segments(points: np.ndarray, closed: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays of the polyline (optionally closed) through ``points``."""
    pts = np.asarray(points, dtype=float)
    if closed:
        return pts, np.roll(pts, -1, axis=0)
    return pts[:-1], pts[1:]


def linking_number(loop_a: np.ndarray, loop_b: np.ndarray) -> float:
    """Sum of signed closed-form GLI over all inter-loop segment pairs."""
    a0, a1 = polygon_segments(loop_a)
    b0, b1 = polygon_segments(loop_b)
    vals = gli_closed_form(a0[:, None], a1[:, None], b0[None, :], b1[None, :])
    return float(np.nansum(vals))
