import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hiq.detect import (
    BitImage,
    alignment_cross,
    binarize,
    cross_check,
    find_alignment,
    find_patterns,
    layers_from_rings,
    match_alignment,
    ratio_ok,
    runs,
    scan_line,
)
from hiq.errors import InvalidParameter, LocalizationFailed
from hiq.raster import RasterImage, apply_homography, apply_illumination, render
from hiq.symbology import encode
from hiq.symbology.layout import alignment_coords
from oracles import binarize_oracle


@st.composite
def scenes(draw):
    """Random color cells with optional noise and a lighting ramp: structured, not pure noise."""
    h, w = draw(st.integers(8, 48)), draw(st.integers(8, 48))
    cell = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    grid = rng.choice([0.0, 1.0], size=(h // cell + 1, w // cell + 1, 3))
    px = np.repeat(np.repeat(grid, cell, 0), cell, 1)[:h, :w]
    px = px * (0.4 + 0.6 * rng.random(3))
    px = px * (1 + draw(st.floats(-0.3, 0.3)) * np.linspace(-0.5, 0.5, w))[None, :, None]
    px = px + rng.normal(0, draw(st.sampled_from([0.0, 0.01, 0.05])), px.shape)
    return np.clip(px, 0, 1)


@given(scenes())
def test_binarize_matches_oracle(pixels):
    assert np.array_equal(binarize(pixels).bits, binarize_oracle(pixels))


@given(arrays(np.float64, st.tuples(st.integers(8, 24), st.integers(8, 24), st.just(3)),
              elements=st.floats(0, 1)))
def test_binarize_matches_oracle_on_arbitrary_pixels(pixels):
    assert np.array_equal(binarize(pixels).bits, binarize_oracle(pixels))


def test_noise_only_channel_marks_nothing_black():
    rng = np.random.default_rng(0)
    px = np.clip(0.7 + rng.normal(0, 0.03, (128, 128, 3)), 0, 1)
    assert not binarize(px).bits.any()
    px[36:60, 36:60, 1] = 0.1  # one real dark patch in green
    bits = binarize(px).bits
    assert bits[36:60, 36:60].all() and bits[:32].sum() == 0


def test_flat_image_is_all_white():
    assert not binarize(np.full((40, 40, 3), 0.3)).bits.any()


def test_binarize_rejects_tiny_images():
    with pytest.raises(InvalidParameter):
        binarize(np.zeros((4, 40, 3)))


def test_any_channel_below_threshold_is_black():
    px = np.ones((16, 16, 3))
    px[0, 0] = (1.0, 0.0, 1.0)  # magenta: only green is dark
    assert binarize(px).bits[0, 0] == 1


def test_runs_and_ratio():
    line = np.array([0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0], dtype=np.uint8)
    starts, lengths, values = runs(line)
    assert list(lengths) == [2, 2, 6, 2, 2]
    assert list(values) == [0, 1, 0, 1, 0]
    assert list(starts) == [0, 2, 4, 10, 12]
    assert ratio_ok(np.array([[2, 2, 6, 2, 2]]))[0]
    assert ratio_ok(np.array([[3, 2, 6, 2, 2]]))[0]  # within tolerance
    assert not ratio_ok(np.array([[2, 2, 2, 2, 2]]))[0]


def finder_line(u=3, pad=5):
    return np.array([0] * pad + [1] * u + [0] * u + [1] * 3 * u + [0] * u + [1] * u + [0] * pad, dtype=np.uint8)


def test_scan_line_finds_a_finder_profile():
    hits = scan_line(finder_line())
    assert len(hits) == 1
    center, unit = hits[0]
    assert center == pytest.approx(5 + 3.5 * 3)
    assert unit == pytest.approx(3)


def test_cross_check_from_the_core():
    line = finder_line()
    center, unit = cross_check(line, 5 + 10)
    assert center == pytest.approx(15.5)
    assert unit == pytest.approx(3)
    assert cross_check(line, 2) is None


def test_alignment_cross_tolerates_merged_outer_ring():
    u = 4
    # outer black runs merge with neighbouring dark modules on both sides
    line = np.array([1] * 3 * u + [0] * u + [1] * u + [0] * u + [1] * 3 * u, dtype=np.uint8)
    center, unit = alignment_cross(line, 4 * u + 1, u)
    assert center == pytest.approx(4.5 * u)
    assert unit == pytest.approx(u)


def expected_finder_centers(img, dim):
    pts = [(3.5, 3.5), (dim - 3.5, 3.5), (3.5, dim - 3.5)]
    return [tuple(np.ravel(apply_homography(img.homography, np.array([x]), np.array([y])))) for x, y in pts]


@pytest.mark.parametrize("n, cores", [(1, ["black"] * 3), (2, ["red", "green", "blue"]), (3, ["red", "green", "blue"])])
def test_finders_located_with_colors(n, cores):
    sym = encode(b"detect", n, None, 6)
    img = render(sym, module_px=4)
    pats = find_patterns(binarize(img), img)
    for pat, want, core in zip(pats.finders, expected_finder_centers(img, sym.dim), cores):
        assert np.allclose(pat.center, want, atol=1.0)
        assert pat.module_size == pytest.approx(4, abs=0.5)
        assert pat.core == core
    assert layers_from_rings(pats.finders) == n


@pytest.mark.parametrize("gains, gradient", [((0.7, 0.6, 0.45), (0.0, 0.0)), ((1.0, 1.0, 1.0), (0.2, 0.1))])
def test_finders_located_under_uneven_light(gains, gradient):
    sym = encode(b"detect", 3, None, 6)
    img = apply_illumination(render(sym), gains, gradient)
    pats = find_patterns(binarize(img), img)
    assert [f.core for f in pats.finders] == ["red", "green", "blue"]
    assert layers_from_rings(pats.finders) == 3


def test_alignment_found_near_prediction():
    sym = encode(b"align", 2, None, 10)
    img = render(sym, module_px=4)
    coords = alignment_coords(10)
    r, c = coords[1], coords[2]
    x, y = apply_homography(img.homography, np.array([c + 0.5]), np.array([r + 0.5]))
    guess = (float(x[0]) + 3.0, float(y[0]) - 2.0)
    pat = find_alignment(binarize(img), img, guess, 4.0, "magenta")
    assert pat is not None
    assert np.allclose(pat.center, (x[0], y[0]), atol=1.0)


@pytest.mark.parametrize("gains", [(1.0, 1.0, 1.0), (0.9, 0.6, 1.0), (0.5, 0.8, 0.7)])
def test_template_match_survives_channel_gains(gains):
    sym = encode(b"align", 2, None, 10)
    img = render(sym, module_px=4)
    img = RasterImage(img.pixels * np.array(gains), img.homography)
    coords = alignment_coords(10)
    r, c = coords[1], coords[2]
    x, y = apply_homography(img.homography, np.array([c + 0.5]), np.array([r + 0.5]))
    guess = (float(x[0]) - 4.0, float(y[0]) + 5.0)
    pat = match_alignment(img, guess, 4.0, "magenta", search=3.0)
    assert pat is not None
    assert np.allclose(pat.center, (x[0], y[0]), atol=0.5)
    # an empty bit image forces the template fallback
    blank_bits = BitImage(np.zeros((img.height, img.width), np.uint8))
    assert find_alignment(blank_bits, img, guess, 4.0, "magenta", search=3.0) is not None


def test_no_alignment_on_blank_area():
    img = RasterImage(np.ones((80, 80, 3)))
    assert find_alignment(BitImage(np.zeros((80, 80), np.uint8)), img, (40, 40), 4.0, "black") is None


def test_blank_image_fails_localization():
    img = RasterImage(np.ones((100, 100, 3)))
    with pytest.raises(LocalizationFailed):
        find_patterns(binarize(img), img)
