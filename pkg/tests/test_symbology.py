import numpy as np
import pytest
import segno
import segno.consts as sc
from hypothesis import given
from hypothesis import strategies as st

from hiq.ecc import block_layout, deinterleave, num_raw_data_modules, syndromes
from hiq.errors import CapacityExceeded, InvalidParameter, LayerMismatch
from hiq.symbology import (
    DEFAULT_SEED,
    ModuleRole,
    build_codebook,
    capacity_table,
    dim_of,
    dumps,
    encode,
    layout,
    loads,
    placement,
    read_format,
)
from hiq.symbology.codebook import PATTERN_PALETTE
from hiq.symbology.layout import (
    alignment_coords,
    decode_format_word,
    decode_version_word,
    format_word,
    version_word,
)
from hiq.symbology.placement import WINDOW, bits_to_bytes, bytes_to_bits


def test_dim_and_data_module_counts():
    for v in range(1, 41):
        lay = layout(v)
        assert lay.dim == dim_of(v) == 17 + 4 * v
        assert lay.n_data == num_raw_data_modules(v)
        assert (lay.roles == ModuleRole.DATA).sum() == lay.n_data
        assert len({tuple(p) for p in lay.data_order}) == lay.n_data


def test_alignment_coordinates_match_reference():
    assert alignment_coords(1) == ()
    for v in range(2, 41):
        assert alignment_coords(v) == tuple(sc.ALIGNMENT_POS[v - 2])


@pytest.mark.parametrize("level", ["L", "M", "Q"])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_format_words_are_reference_bch_words(level, n):
    # the 5-bit field is (level code, 3-bit slot); the slot carries 2 (n - 1)
    index = sc.ERROR_MAPPING[level] << 3 | (n - 1) << 1
    assert format_word(level, n) == sc.FORMAT_INFO[index]


def test_version_words_are_reference_bch_words():
    for v in range(7, 41):
        assert version_word(v) == sc.VERSION_INFO[v - 7]


@given(st.sampled_from(["L", "M", "Q"]), st.integers(1, 4), st.sets(st.integers(0, 14), max_size=3))
def test_format_word_survives_three_bit_errors(level, n, flips):
    word = format_word(level, n)
    for b in flips:
        word ^= 1 << b
    assert decode_format_word(word)[:2] == (level, n)


@given(st.integers(7, 40), st.sets(st.integers(0, 17), max_size=3))
def test_version_word_survives_three_bit_errors(v, flips):
    word = version_word(v)
    for b in flips:
        word ^= 1 << b
    assert decode_version_word(word)[0] == v


@pytest.mark.parametrize("version", [1, 2, 7, 15, 40])
def test_zigzag_order_reads_reference_codewords(version):
    """A reference QR code, unmasked and read in our data order, yields valid RS blocks."""
    level = "L"
    cap = block_layout(version, level).data_codewords - 4
    qr = segno.make_qr(b"x" * max(1, cap // 2), version=version, error=level, mask=0,
                       boost_error=False, mode="byte")
    m = np.array([list(row) for row in qr.matrix], dtype=np.uint8)
    rows, cols = np.indices(m.shape)
    unmasked = m ^ ((rows + cols) % 2 == 0)
    order = layout(version).data_order
    bits = unmasked[order[:, 0], order[:, 1]]
    stream = bits_to_bytes(bits, block_layout(version, level).total_codewords)
    for blk in deinterleave(stream, version, level):
        assert not syndromes(blk.codeword, len(blk.ecc_codewords)).any()


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_codebook_is_a_bijection_into_the_rgb_cube(n):
    cb = build_codebook(n)
    assert len(cb.colors) == 2 ** n
    assert len({tuple(c) for c in cb.colors}) == 2 ** n
    assert ((cb.colors >= 0) & (cb.colors <= 1)).all()
    table = cb.bits_table()
    assert (cb.unmap(cb.colors) == table.T).all()
    assert (cb.color((0,) * n) == 1).all()  # all-zero tuple is white
    assert (cb.color((1,) * n) == 0).all()  # all-one tuple is black


def test_codebook_rejects_bad_layer_count():
    with pytest.raises(InvalidParameter):
        build_codebook(5)


@pytest.mark.parametrize("randomize", [True, False])
def test_placement_is_a_permutation_of_data_modules(randomize):
    pl = placement(10, "M", 77, 1, randomize)
    lay = layout(10)
    assert sorted(map(tuple, pl.positions)) == sorted(map(tuple, lay.data_order))
    bits = np.random.default_rng(0).integers(0, 2, lay.n_data).astype(np.uint8)
    m = np.zeros((lay.dim, lay.dim), dtype=np.uint8)
    assert (pl.read(pl.place(bits, m)) == bits).all()


def test_placement_depends_on_seed_and_layer():
    a = placement(8, "L", 1, 0).positions
    assert (a == placement(8, "L", 1, 0).positions).all()
    assert (a != placement(8, "L", 2, 0).positions).any()
    assert (a != placement(8, "L", 1, 1).positions).any()


def test_randomized_placement_separates_consecutive_block_bits():
    pl = placement(20, "Q", DEFAULT_SEED, 0)
    order = np.lexsort((pl.bit_index, pl.block_of))
    order = order[pl.block_of[order] >= 0]
    same = pl.block_of[order[1:]] == pl.block_of[order[:-1]]
    win = pl.positions[:, 0] // WINDOW * 1000 + pl.positions[:, 1] // WINDOW
    clash = win[order[1:]] == win[order[:-1]]
    assert (same & clash).mean() < 1e-3


@pytest.mark.parametrize("level", ["L", "M", "Q"])
def test_randomized_blocks_spread_over_all_quadrants(level):
    pl = placement(40, level, DEFAULT_SEED, 0)
    half = 177 // 2
    quadrant = (pl.positions[:, 0] >= half) * 2 + (pl.positions[:, 1] >= half)
    for b in np.unique(pl.block_of[pl.block_of >= 0]):
        counts = np.bincount(quadrant[pl.block_of == b], minlength=4)
        assert counts.max() / counts.sum() <= 0.35


def test_sequential_placement_keeps_blocks_contiguous():
    pl = placement(20, "Q", 0, 0, randomize=False)
    lay = layout(20)
    rank = {tuple(p): i for i, p in enumerate(lay.data_order)}
    idx = np.array([rank[tuple(p)] for p in pl.positions])
    for b in range(block_layout(20, "Q").num_blocks):
        span = np.sort(idx[pl.block_of == b])
        assert span[-1] - span[0] + 1 == len(span)


@given(st.binary(max_size=64))
def test_bits_bytes_round_trip(data):
    n_bits = len(data) * 8 + 5
    assert bits_to_bytes(bytes_to_bits(data, n_bits), len(data)) == data


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pattern_colors(n):
    sym = encode(b"abc", n, None, 7)
    colors = sym.module_colors()
    cores = ["black"] * 3 if n == 1 else ["red", "green", "blue"]
    ring = {1: "black", 2: "magenta", 3: "cyan"}[n]
    d = sym.dim
    for (r, c), core in zip([(3, 3), (3, d - 4), (d - 4, 3)], cores):
        assert tuple(colors[r, c]) == PATTERN_PALETTE[core]
        assert tuple(colors[r - 3, c]) == PATTERN_PALETTE[ring]
        assert tuple(colors[r - 2, c]) == PATTERN_PALETTE["white"]
    assert tuple(colors[d - 7, d - 7]) == PATTERN_PALETTE["black" if n == 1 else "magenta"]


def test_monochrome_symbol_is_black_and_white():
    colors = encode(b"mono", 1, "M", 3).module_colors()
    assert set(np.unique(colors)) <= {0.0, 1.0}
    assert (colors == colors[..., :1]).all()


def test_capacity_examples():
    assert capacity_table(40, 3)["L"] == 8859
    encode(bytes(8859), 3, "L,L,L", 40)
    with pytest.raises(CapacityExceeded):
        encode(bytes(8860), 3, "L,L,L", 40)


def test_layer_count_must_match_levels():
    with pytest.raises(LayerMismatch):
        encode(b"x", 3, "L,M", 5)


@given(st.binary(max_size=40), st.integers(1, 3), st.sampled_from(["L", "M", "Q"]), st.booleans())
def test_container_round_trip(payload, n, level, randomized):
    sym = encode(payload, n, [level] * n, 4, seed=99, randomized=randomized)
    text = dumps(sym)
    again = loads(text)
    assert dumps(again) == text
    assert (again.layers == sym.layers).all()
    assert again.identity == sym.identity
    assert again.randomized == randomized


def test_container_rejects_garbage():
    with pytest.raises(InvalidParameter):
        loads("not a symbol\n")


def test_read_format_from_symbol():
    sym = encode(b"fmt", 3, "L,M,Q", 9)
    fmt = read_format(sym)
    assert fmt.n_layers == 3
    assert [lv.value for lv in fmt.ec_levels] == ["L", "M", "Q"]
    assert fmt.version == 9
