import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from hiq.errors import DegenerateConfiguration, FrameRejected, InvalidParameter
from hiq.geometry import (
    ALIGNMENT_WEIGHT,
    FINDER_WEIGHT,
    Correspondence,
    canonical,
    default_weight,
    design_matrix,
    estimate_rgt,
    feature_block,
    homography_4pt,
    neighbor_stack,
    project_centers,
    reprojection_error,
    sample_centers,
    solve_weighted,
)
from hiq.raster import RasterImage, apply_homography, render
from hiq.symbology import encode


def random_homography(rng, scale=0.05):
    H = np.eye(3) + rng.normal(0, scale, (3, 3))
    H[2, :2] *= 0.01
    H[:2, 2] += rng.uniform(-20, 20, 2)
    return H


@given(st.integers(0, 10_000), st.integers(4, 12))
def test_exact_recovery_from_noise_free_points(seed, n):
    rng = np.random.default_rng(seed)
    H = random_homography(rng)
    src = rng.uniform(0, 100, (n, 2))
    dx, dy = apply_homography(H, src[:, 0], src[:, 1])
    corrs = [Correspondence(tuple(s), (x, y), rng.uniform(0.1, 1)) for s, x, y in zip(src, dx, dy)]
    est = estimate_rgt(corrs)
    assert np.allclose(est, canonical(H), atol=1e-7)
    assert reprojection_error(est, corrs).max() < 1e-6


def test_four_point_fit_is_exact():
    H = np.array([[1.1, 0.05, 3.0], [-0.02, 0.95, -2.0], [1e-4, 2e-4, 1.0]])
    src = np.array([[0, 0], [50, 0], [50, 50], [0, 50]], float)
    dx, dy = apply_homography(H, src[:, 0], src[:, 1])
    corrs = [Correspondence(tuple(s), (x, y)) for s, x, y in zip(src, dx, dy)]
    assert np.allclose(homography_4pt(corrs), canonical(H))


def test_weighted_solution_is_the_smallest_eigenvector():
    """Unnormalized fit equals the minimizer of |W A h| with |h| = 1 (oracle: symmetric eigensolver)."""
    rng = np.random.default_rng(3)
    H = random_homography(rng)
    src = rng.uniform(0, 10, (10, 2))
    dx, dy = apply_homography(H, src[:, 0], src[:, 1])
    dst = np.column_stack([dx, dy]) + rng.normal(0, 0.05, (10, 2))
    w = np.where(np.arange(10) < 3, FINDER_WEIGHT, ALIGNMENT_WEIGHT)
    est, _ = solve_weighted(src, dst, w, normalize=False)
    A = design_matrix(src, dst, w)
    _, vecs = scipy.linalg.eigh(A.T @ A)
    assert np.allclose(est, canonical(vecs[:, 0].reshape(3, 3)), atol=1e-8)


def test_normalization_does_not_change_exact_solutions():
    rng = np.random.default_rng(8)
    H = random_homography(rng)
    src = rng.uniform(0, 500, (6, 2))
    dx, dy = apply_homography(H, src[:, 0], src[:, 1])
    a, _ = solve_weighted(src, np.column_stack([dx, dy]), np.ones(6), normalize=True)
    b, _ = solve_weighted(src, np.column_stack([dx, dy]), np.ones(6), normalize=False)
    assert np.allclose(a, b, atol=1e-6)


def test_collinear_points_are_degenerate():
    src = [(i, 2 * i) for i in range(5)]
    corrs = [Correspondence(p, p) for p in src]
    with pytest.raises(DegenerateConfiguration):
        estimate_rgt(corrs)
    with pytest.raises(DegenerateConfiguration):
        estimate_rgt(corrs[:3])


def test_four_point_rejects_three_collinear():
    corrs = [Correspondence(p, p) for p in [(0, 0), (1, 1), (2, 2), (0, 5)]]
    with pytest.raises(DegenerateConfiguration):
        homography_4pt(corrs)
    with pytest.raises(InvalidParameter):
        homography_4pt(corrs[:3])


def test_weights_must_be_positive():
    with pytest.raises(InvalidParameter):
        Correspondence((0, 0), (0, 0), 0.0)
    assert default_weight("finder") == FINDER_WEIGHT
    assert default_weight("alignment") == ALIGNMENT_WEIGHT


def test_canonical_sign_and_scale():
    H = np.diag([2.0, 2.0, -2.0])
    C = canonical(H)
    assert np.linalg.norm(C) == pytest.approx(1)
    assert C[2, 2] > 0


def test_neighbor_stack_order_and_edges():
    center = np.arange(3 * 3 * 3, dtype=float).reshape(3, 3, 3)
    st_ = neighbor_stack(center)
    assert st_.shape == (3, 3, 5, 3)
    # rows: center, top, bottom, left, right
    assert np.array_equal(st_[1, 1, 0], center[1, 1])
    assert np.array_equal(st_[1, 1, 1], center[0, 1])
    assert np.array_equal(st_[1, 1, 2], center[2, 1])
    assert np.array_equal(st_[1, 1, 3], center[1, 0])
    assert np.array_equal(st_[1, 1, 4], center[1, 2])
    # off-grid neighbors replicate the center
    assert np.array_equal(st_[0, 0, 1], center[0, 0])
    assert np.array_equal(st_[0, 0, 3], center[0, 0])
    assert np.array_equal(st_[2, 2, 2], center[2, 2])
    fb = feature_block(st_, 1, 2)
    assert fb.position == (1, 2) and fb.X.shape == (5, 3)


def test_sampling_with_ground_truth_reads_module_colors():
    sym = encode(b"geo", 3, None, 2)
    img = render(sym, module_px=5)
    H = np.linalg.inv(img.homography)
    assert np.array_equal(sample_centers(img, H, sym.dim), sym.module_colors())
    x, y = project_centers(H, sym.dim)
    assert x[0, 0] == pytest.approx((4 + 0.5) * 5)
    assert y[-1, 0] == pytest.approx((4 + sym.dim - 0.5) * 5)


def test_centers_outside_the_image_reject_the_frame():
    img = RasterImage(np.ones((20, 20, 3)))
    with pytest.raises(FrameRejected):
        sample_centers(img, np.eye(3), 25)
