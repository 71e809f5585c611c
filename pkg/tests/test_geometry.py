import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import ortho_group

from pvrc import geometry


def test_pairwise_sq_dist_examples():
    np.testing.assert_array_equal(geometry.pairwise_sq_dist([[0.0], [3.0]]), [[0, 9], [9, 0]])
    np.testing.assert_array_equal(geometry.pairwise_sq_dist([[1.5, 2.0], [1.5, 2.0]]), np.zeros((2, 2)))
    d = geometry.pairwise_sq_dist([[0, 0], [3, 0], [0, 4]])
    assert sorted([d[0, 1], d[0, 2], d[1, 2]]) == [9, 16, 25]
    assert np.array_equal(d, d.T) and not d.diagonal().any()


def test_pairwise_sq_dist_rejects_ragged_or_bad_input():
    with pytest.raises(ValueError):
        geometry.pairwise_sq_dist([[0.0, 1.0], [1.0]])
    with pytest.raises(ValueError):
        geometry.pairwise_sq_dist([[0.0, np.nan], [1.0, 1.0]])
    with pytest.raises(ValueError):
        geometry.pairwise_sq_dist([[0.0, 1.0]])


def test_cm_matrix_examples():
    np.testing.assert_array_equal(geometry.cm_matrix([[0, 9], [9, 0]]), [[0, 9, 1], [9, 0, 1], [1, 1, 0]])
    np.testing.assert_array_equal(geometry.cm_matrix(np.zeros((2, 2))), [[0, 0, 1], [0, 0, 1], [1, 1, 0]])
    d = geometry.pairwise_sq_dist([[0, 0], [3, 0], [0, 4]])
    q = geometry.cm_matrix(d)
    assert q.shape == (4, 4)
    np.testing.assert_array_equal(q[:3, :3], d)
    np.testing.assert_array_equal(q[3], [1, 1, 1, 0])
    np.testing.assert_array_equal(q[:, 3], [1, 1, 1, 0])


def test_cm_matrix_rejects_asymmetric():
    with pytest.raises(ValueError):
        geometry.cm_matrix([[0, 1], [2, 0]])


def test_unifying_factor_exact_values():
    assert geometry.unifying_factor(2) == Fraction(1, 2)
    assert geometry.unifying_factor(3) == Fraction(-1, 16)
    assert geometry.unifying_factor(4) == Fraction(1, 288)
    with pytest.raises(ValueError):
        geometry.unifying_factor(1)


@pytest.mark.parametrize("n", [5, 12, 20, 21, 30, 60])
def test_unifying_factor_matches_closed_form(n):
    expected = Fraction((-1) ** n, 2 ** (n - 1) * math.factorial(n - 1) ** 2)
    got = geometry.unifying_factor(n)
    if n <= 20:
        assert got == expected
    else:
        assert isinstance(got, float)
        assert abs(got - float(expected)) <= 1e-15 * abs(float(expected))


def test_simplex_sq_volume_examples():
    assert geometry.simplex_sq_volume([[0.0], [3.0]]) == pytest.approx(9.0, rel=1e-12)
    assert geometry.simplex_sq_volume([[0, 0], [3, 0], [0, 4]]) == pytest.approx(36.0, rel=1e-12)
    tet = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(8)
    assert geometry.simplex_sq_volume(tet) == pytest.approx(1 / 72, rel=1e-12)
    info = geometry.simplex_volume_info([[0, 0], [1, 0], [2, 0]])
    assert info.sq_volume == 0.0 and info.degenerate


def test_coincident_points_are_degenerate():
    info = geometry.simplex_volume_info([[2.0, 2.0], [2.0, 2.0], [2.0, 2.0]])
    assert info.degenerate and info.sq_volume == 0.0


def test_large_scale_features_not_falsely_degenerate():
    rng = np.random.default_rng(5)
    pts = 255.0 * rng.random((6, 40))
    info = geometry.simplex_volume_info(pts)
    assert not info.degenerate and info.sq_volume > 0


def test_heron_examples():
    assert geometry.heron_sq_area(9, 16, 25) == pytest.approx(36.0)
    assert geometry.heron_sq_area(1, 1, 4) == 0.0
    assert geometry.heron_sq_area(4, 4, 4) == pytest.approx(3.0)


def test_heron_agrees_with_cayley_menger_on_500_triangles():
    rng = np.random.default_rng(17)
    for _ in range(500):
        pts = rng.standard_normal((3, int(rng.integers(2, 8))))
        d = geometry.pairwise_sq_dist(pts)
        cm = geometry.simplex_sq_volume(pts)
        assert cm == pytest.approx(geometry.heron_sq_area(d[0, 1], d[0, 2], d[1, 2]), rel=1e-10)


def test_lu_det_sign_and_value():
    rng = np.random.default_rng(3)
    for size in range(1, 9):
        m = rng.standard_normal((size, size))
        assert geometry.lu_det(m) == pytest.approx(np.linalg.det(m), rel=1e-10)
    assert geometry.lu_det(np.zeros((3, 3))) == 0.0


def test_block_det_examples():
    assert geometry.block_det(np.eye(2), np.zeros((2, 3)), np.zeros((3, 2)), np.eye(3)) == pytest.approx(1.0)
    A = np.array([[2.0, 1.0], [0.5, 3.0]])
    D = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 4.0], [1.0, 0.0, 1.0]])
    got = geometry.block_det(A, np.zeros((2, 3)), np.zeros((3, 2)), D)
    assert got == pytest.approx(np.linalg.det(A) * np.linalg.det(D), rel=1e-12)


def test_block_det_random_3_plus_2_matches_assembled():
    rng = np.random.default_rng(11)
    P = rng.standard_normal((5, 5))
    P[3:, 3:] += 3 * np.eye(2)
    got = geometry.block_det(P[:3, :3], P[:3, 3:], P[3:, :3], P[3:, 3:])
    assert got == pytest.approx(geometry.lu_det(P), rel=1e-9)


def test_block_det_200_instances():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        m, n = (int(v) for v in rng.integers(1, 7, size=2))
        P = rng.standard_normal((m + n, m + n))
        while np.linalg.cond(P[m:, m:]) > 1e6:
            P[m:, m:] += np.eye(n)
        got = geometry.block_det(P[:m, :m], P[:m, m:], P[m:, :m], P[m:, m:])
        assert got == pytest.approx(np.linalg.det(P), rel=1e-9)


def test_block_det_singular_d_raises():
    with pytest.raises(geometry.SingularBlockError):
        geometry.block_det(np.eye(2), np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2)))


def test_block_det_shape_mismatch():
    with pytest.raises(ValueError):
        geometry.block_det(np.eye(2), np.ones((2, 3)), np.ones((2, 2)), np.eye(2))


def _point_sets(min_n=2, max_n=6):
    return st.integers(min_n, max_n).flatmap(
        lambda n: st.integers(max(1, n - 1), 7).flatmap(
            lambda q: arrays(np.float64, (n, q), elements=st.floats(-10, 10, allow_nan=False, width=64))
        )
    )


def _well_spread(pts):
    info = geometry.simplex_volume_info(pts)
    d = geometry.pairwise_sq_dist(pts)
    n = pts.shape[0]
    mean_sq = d.sum() / (n * (n - 1))
    # keep only sets whose volume is comfortably above round-off
    return not info.degenerate and info.sq_volume > 1e-6 * mean_sq ** (n - 1)


@settings(max_examples=150, deadline=None)
@given(_point_sets(), st.integers(0, 2**32 - 1))
def test_rigid_motion_invariance(pts, seed):
    if not _well_spread(pts):
        return
    q = pts.shape[1]
    rng = np.random.default_rng(seed)
    R = ortho_group.rvs(q, random_state=rng) if q > 1 else np.array([[-1.0]])
    moved = pts @ R.T + rng.standard_normal(q) * 5
    assert geometry.simplex_sq_volume(moved) == pytest.approx(geometry.simplex_sq_volume(pts), rel=1e-9)


@settings(max_examples=150, deadline=None)
@given(_point_sets(), st.floats(0.1, 10.0))
def test_scaling_law(pts, s):
    if not _well_spread(pts):
        return
    n = pts.shape[0]
    expected = geometry.simplex_sq_volume(pts) * s ** (2 * (n - 1))
    assert geometry.simplex_sq_volume(pts * s) == pytest.approx(expected, rel=1e-9)


@settings(max_examples=150, deadline=None)
@given(_point_sets(), st.randoms(use_true_random=False))
def test_permutation_invariance(pts, rnd):
    if not _well_spread(pts):
        return
    order = list(range(pts.shape[0]))
    rnd.shuffle(order)
    assert geometry.simplex_sq_volume(pts[order]) == pytest.approx(geometry.simplex_sq_volume(pts), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (2, 5), elements=st.floats(-1e3, 1e3, allow_nan=False, width=64)))
def test_two_points_give_squared_distance(pts):
    d2 = float(np.sum((pts[0] - pts[1]) ** 2))
    if d2 == 0:
        assert geometry.simplex_sq_volume(pts) == 0.0
    else:
        assert geometry.simplex_sq_volume(pts) == pytest.approx(d2, rel=1e-12)


def test_point_set_is_read_only():
    arr = geometry.as_point_set([[0.0, 1.0], [2.0, 3.0]])
    with pytest.raises(ValueError):
        arr[0, 0] = 5.0
