import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from tanglemap.errors import AllZeroMatrix, DegenerateSegment, NearSingular, TooFewSegments
from tanglemap.gli import (
    GLI_SATURATION,
    Segment3D,
    WritheMatrix,
    center,
    center_mask,
    density,
    gli_quadrature,
    gli_segments,
    linking_number,
    segment_distance,
    writhe,
    writhe_matrix,
)

SKEW_A = Segment3D([-1, 0, 0], [1, 0, 0], min_length=0.1)
SKEW_B = Segment3D([0, -1, 1], [0, 1, 1], min_length=0.1)
COPLANAR_A = Segment3D([0, 0, 0], [1, 0, 0], min_length=0.1)
COPLANAR_B = Segment3D([0, 1, 0], [1, 1, 0], min_length=0.1)


def seg(p0, p1):
    return Segment3D(p0, p1, min_length=1e-6)


coord = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord, coord).map(np.array)


@st.composite
def segment_pairs(draw, min_ratio=0.0):
    a0, a1, b0, b1 = (draw(point) for _ in range(4))
    la, lb = np.linalg.norm(a1 - a0), np.linalg.norm(b1 - b0)
    assume(la > 1.0 and lb > 1.0)
    d = float(segment_distance(a0, a1, b0, b1))
    assume(d > max(1e-3, min_ratio * max(la, lb)))
    return seg(a0, a1), seg(b0, b1)


# --- single pairs ---------------------------------------------------------


def test_coplanar_pair_is_exactly_zero():
    assert gli_segments(COPLANAR_A, COPLANAR_B) == 0.0


def test_coplanar_quadrature_vanishes():
    assert abs(gli_quadrature(COPLANAR_A, COPLANAR_B, 64)) < 1e-12


def test_skew_pair_matches_solid_angle_value():
    # a - b sweeps a 2x2 square seen from distance 1: solid angle 2*pi/3
    val = gli_segments(SKEW_A, SKEW_B)
    assert abs(abs(val) - 1.0 / 6.0) < 1e-12


def test_skew_pair_matches_quadrature_oracle():
    assert abs(gli_segments(SKEW_A, SKEW_B) - gli_quadrature(SKEW_A, SKEW_B, 4096)) < 1e-6


def test_swap_symmetry_on_example():
    assert gli_segments(SKEW_A, SKEW_B) == gli_segments(SKEW_B, SKEW_A)


def test_quadrature_refinement_converges():
    a = seg([0, 0, 0], [10, 1, 0])
    b = seg([3, -4, 2], [5, 6, 3])
    exact = gli_segments(a, b)
    errs = [abs(gli_quadrature(a, b, n, single_kernel=False) - exact) for n in (16, 32, 64, 128)]
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


def test_single_precision_kernel_close_to_double():
    a = seg([0, 0, 0], [10, 1, 0])
    b = seg([3, -4, 0.5], [5, 6, 3])
    q32 = gli_quadrature(a, b, 1024)
    q64 = gli_quadrature(a, b, 1024, single_kernel=False)
    assert abs(q32 - q64) < 1e-7


def _rectangle(corners):
    return [seg(p, q) for p, q in zip(corners, corners[1:] + corners[:1])]


def test_hopf_rectangles_link_once_by_quadrature():
    loop_a = _rectangle([(-10, -10, 0), (10, -10, 0), (10, 10, 0), (-10, 10, 0)])
    loop_b = _rectangle([(0, 0, -10), (20, 0, -10), (20, 0, 10), (0, 0, 10)])
    total = sum(gli_quadrature(a, b, 512) for a in loop_a for b in loop_b)
    assert abs(abs(total) - 1.0) < 1e-3
    closed = sum(gli_segments(a, b) for a in loop_a for b in loop_b)
    assert abs(closed - total) < 1e-3


def test_degenerate_segment_rejected():
    with pytest.raises(DegenerateSegment):
        Segment3D([0, 0, 0], [0.5, 0, 0])


def test_touching_pair_is_near_singular():
    a = seg([0, 0, 0], [10, 0, 0])
    b = seg([5, 0, 0], [5, 10, 3])
    with pytest.raises(NearSingular):
        gli_segments(a, b)
    with pytest.raises(NearSingular):
        gli_quadrature(a, b, 16)


# --- properties -----------------------------------------------------------


@given(segment_pairs())
def test_symmetry_and_bound(pair):
    a, b = pair
    v = gli_segments(a, b)
    assert v == gli_segments(b, a)
    assert abs(v) <= GLI_SATURATION + 1e-12


@given(segment_pairs(min_ratio=0.05))
def test_closed_form_agrees_with_quadrature(pair):
    a, b = pair
    assert abs(gli_segments(a, b) - gli_quadrature(a, b, 4096)) < 1e-6


@given(segment_pairs(min_ratio=0.01),
       st.lists(st.floats(-1, 1), min_size=4, max_size=4),
       st.tuples(coord, coord, coord))
def test_rigid_motion_invariance(pair, quat, shift):
    q = np.array(quat)
    assume(np.linalg.norm(q) > 0.1)
    R = Rotation.from_quat(q).as_matrix()
    t = np.array(shift)
    a, b = pair
    moved = [seg(R @ s.p0 + t, R @ s.p1 + t) for s in (a, b)]
    assert abs(gli_segments(*moved) - gli_segments(a, b)) < 1e-9


@given(segment_pairs(min_ratio=0.01), st.floats(0.1, 10.0))
def test_uniform_scaling_invariance(pair, s):
    a, b = pair
    scaled = [Segment3D(x.p0 * s, x.p1 * s, min_length=1e-9) for x in (a, b)]
    assert abs(gli_segments(*scaled) - gli_segments(a, b)) < 1e-9


# --- writhe matrix and coordinates ----------------------------------------


def test_coplanar_matrix_all_zero():
    T = writhe_matrix([COPLANAR_A, COPLANAR_B])
    assert T.values.shape == (2, 2)
    assert not T.values.any()
    assert writhe(T) == 0.0
    assert density(T) == 0.0


def test_too_few_segments():
    with pytest.raises(TooFewSegments):
        writhe_matrix([SKEW_A])


def test_three_segment_composition():
    # on the z axis: shares the plane y=0 with A and x=0 with B
    c = Segment3D([0, 0, 3], [0, 0, 5], min_length=0.1)
    assert gli_segments(SKEW_A, c) == 0.0 and gli_segments(SKEW_B, c) == 0.0
    T = writhe_matrix([SKEW_A, SKEW_B, c])
    expected = np.zeros((3, 3))
    expected[0, 1] = abs(gli_segments(SKEW_A, SKEW_B))
    np.testing.assert_array_equal(T.values, expected)


def test_touching_pair_saturates_in_matrix():
    a = seg([0, 0, 0], [10, 0, 0])
    b = seg([5, 0, 0], [5, 10, 3])
    T = writhe_matrix([a, b])
    assert T.values[0, 1] == GLI_SATURATION


@given(st.lists(st.tuples(point, point), min_size=2, max_size=9))
def test_matrix_structure(raw):
    segs = []
    for p, q in raw:
        assume(np.linalg.norm(q - p) > 1.0)
        segs.append(seg(p, q))
    T = writhe_matrix(segs)
    n = len(segs)
    assert T.values.shape == (n, n)
    assert np.all(T.values >= 0)
    assert not np.tril(T.values).any()
    assert writhe(T) >= 0
    assert 0.0 <= density(T) <= 1.0
    assert (writhe(T) == 0) == (not T.values.any())


def test_writhe_of_single_entry():
    v = np.zeros((2, 2))
    v[0, 1] = 0.3
    assert writhe(WritheMatrix(v)) == pytest.approx(0.15, abs=1e-15)


def _matrix(n, entries):
    v = np.zeros((n, n))
    for (i, j), x in entries.items():
        v[i, j] = x
    return WritheMatrix(v)


def test_density_examples():
    assert density(_matrix(4, {})) == 0.0
    assert density(_matrix(4, {(0, 1): 1, (0, 2): 1, (1, 2): 1, (2, 3): 1})) == 0.0
    assert density(_matrix(4, {(0, 1): 0.1, (0, 2): 0.1, (1, 2): 0.1, (2, 3): 0.9})) == 0.25


def test_center_examples():
    assert center(_matrix(6, {(2, 5): 0.4})) == (2, 5)
    assert center(_matrix(6, {(1, 3): 0.2, (1, 5): 0.2})) == (1, 3)
    assert center(_matrix(6, {(0, 1): 0.3, (4, 5): 0.1})) == (0, 1)
    with pytest.raises(AllZeroMatrix):
        center(_matrix(3, {}))


@given(st.lists(st.floats(0.0, 0.5), min_size=10, max_size=10),
       st.integers(0, 9), st.floats(1e-6, 0.5))
def test_adding_a_pair_never_lowers_total(vals, k, extra):
    n = 5
    v = np.zeros((n, n))
    v[np.triu_indices(n, 1)] = vals
    before = v.sum()
    iu = np.triu_indices(n, 1)
    v[iu[0][k], iu[1][k]] += extra
    assert v.sum() >= before


def test_center_mask_line_without_dilation():
    s = Segment3D([0, 0, 1000], [20, 0, 1000], pixel_p0=[10, 10], pixel_p1=[20, 10])
    mask = center_mask([s, s], (0, 1), (32, 24), dilation_px=0)
    assert mask.shape == (24, 32)
    assert mask.sum() == 11
    assert mask[10, 10:21].all()


@given(st.integers(1, 80), st.integers(1, 80), st.integers(0, 10))
def test_center_mask_dims(w, h, dil):
    s = Segment3D([0, 0, 1000], [20, 0, 1000], pixel_p0=[0, 0], pixel_p1=[w - 1, h - 1])
    assert center_mask([s, s], (0, 1), (w, h), dil).shape == (h, w)


def test_center_mask_meets_crossing_region():
    # crossing region: bounding box of the projected crossings padded by a
    # quarter of the default map window
    from tanglemap.entanglement import generate_detailed
    from tanglemap.scenegen import make_scene
    hits = 0
    for seed in range(20):
        scene, rendering = make_scene("twisted", "C", 2, seed=seed)
        mask = generate_detailed(rendering.image).center_mask
        assert mask.any()
        pts = np.array([c.pixel_pos for c in scene.crossings])
        x0, y0 = np.floor(pts.min(axis=0)).astype(int) - 32
        x1, y1 = np.ceil(pts.max(axis=0)).astype(int) + 32
        box = np.zeros_like(mask)
        box[max(y0, 0):y1 + 1, max(x0, 0):x1 + 1] = True
        hits += bool((box & mask).any())
    assert hits >= 18


def test_linking_number_of_round_loops():
    t = np.linspace(0, 2 * math.pi, 40, endpoint=False)
    a = np.stack([np.cos(t), np.sin(t), 0 * t], axis=1) * 10
    b = np.stack([10 + 10 * np.cos(t), 0 * t, 10 * np.sin(t)], axis=1)
    assert abs(abs(linking_number(a, b)) - 1.0) < 1e-9
    assert abs(linking_number(a, b + [50, 0, 0])) < 1e-9
