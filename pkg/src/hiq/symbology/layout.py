"""QR-style module geometry shared by every layer.

Coordinates are (row, col) with (0, 0) the top-left module. The geometry of
version ``v`` is the QR geometry: dim = 17 + 4v, three 7x7 finders with
separators, timing row/column 6, the version-dependent alignment grid, two
copies of a 15-bit format word and, from version 7 on, two copies of an
18-bit version word.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InvalidParameter


class ModuleRole(enum.IntEnum):
    DATA = 0
    FINDER = 1  # includes the white separators
    ALIGNMENT = 2
    TIMING = 3
    FORMAT_REGION = 4  # format words, version words and the dark module


def dim_of(version: int) -> int:
    return 17 + 4 * version


def version_of(dim: int) -> int:
    if dim < 21 or (dim - 17) % 4 or dim > 177:
        raise InvalidParameter(f"invalid symbol dimension {dim}")
    return (dim - 17) // 4


def check_version(version: int) -> int:
    if not isinstance(version, (int, np.integer)) or not 1 <= version <= 40:
        raise InvalidParameter(f"version must be in 1..40, got {version!r}")
    return int(version)


@lru_cache(maxsize=None)
def alignment_coords(version: int) -> tuple[int, ...]:
    if version == 1:
        return ()
    numalign = version // 7 + 2
    step = (version * 8 + numalign * 3 + 5) // (numalign * 4 - 4) * 2
    size = dim_of(version)
    pos = [size - 7 - i * step for i in range(numalign - 1)] + [6]
    return tuple(sorted(pos))


@lru_cache(maxsize=None)
def alignment_centers(version: int) -> tuple[tuple[int, int], ...]:
    """Alignment pattern centers (row, col), excluding the three finder corners."""
    coords = alignment_coords(version)
    if not coords:
        return ()
    last = len(coords) - 1
    out = []
    for i, r in enumerate(coords):
        for j, c in enumerate(coords):
            if (i, j) in ((0, 0), (0, last), (last, 0)):
                continue
            out.append((r, c))
    return tuple(out)


def finder_origins(version: int) -> tuple[tuple[int, int], ...]:
    """Top-left module of finders #1 (top-left), #2 (top-right), #3 (bottom-left)."""
    d = dim_of(version)
    return ((0, 0), (0, d - 7), (d - 7, 0))


def finder_centers_grid(version: int) -> np.ndarray:
    """Finder centers in continuous grid coordinates (x, y) = (col, row) + 0.5."""
    d = dim_of(version)
    return np.array([[3.5, 3.5], [d - 3.5, 3.5], [3.5, d - 3.5]])


def _bch(value: int, poly: int, poly_degree: int) -> int:
    rem = value << poly_degree
    top = poly.bit_length() - 1
    for shift in range(rem.bit_length() - 1, top - 1, -1):
        if rem >> shift & 1:
            rem ^= poly << (shift - top)
    return rem


EC_FORMAT_CODE = {"L": 1, "M": 0, "Q": 3}
FORMAT_MASK = 0x5412


def format_word(level: str, n_layers: int) -> int:
    """15-bit BCH(15,5) word: EC level (2 bits), n_layers - 1 (2 bits), spare."""
    data = EC_FORMAT_CODE[level] << 3 | (n_layers - 1) << 1
    return (data << 10 | _bch(data, 0x537, 10)) ^ FORMAT_MASK


@lru_cache(maxsize=None)
def _format_codebook() -> tuple[tuple[int, int], ...]:
    words = []
    for data in range(32):
        words.append((data, (data << 10 | _bch(data, 0x537, 10)) ^ FORMAT_MASK))
    return tuple(words)


def decode_format_word(word: int) -> tuple[str, int, int] | None:
    """Nearest valid format word; returns (level, n_layers, distance) or None if > 3 bits off."""
    best = min(_format_codebook(), key=lambda dw: bin(dw[1] ^ word).count("1"))
    data, cw = best
    dist = bin(cw ^ word).count("1")
    code = data >> 3
    levels = {v: k for k, v in EC_FORMAT_CODE.items()}
    if dist > 3 or code not in levels:
        return None
    return levels[code], ((data >> 1) & 3) + 1, dist


def version_word(version: int) -> int:
    return version << 12 | _bch(version, 0x1F25, 12)


def decode_version_word(word: int) -> tuple[int, int] | None:
    best = min(range(7, 41), key=lambda v: bin(version_word(v) ^ word).count("1"))
    dist = bin(version_word(best) ^ word).count("1")
    return (best, dist) if dist <= 3 else None


def format_positions(dim: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Two lists of 15 (row, col) positions, bit i of the word at index i."""
    first = [(i, 8) for i in range(6)] + [(7, 8), (8, 8), (8, 7)] + [(8, 14 - i) for i in range(9, 15)]
    second = [(8, dim - 1 - i) for i in range(8)] + [(dim - 15 + i, 8) for i in range(8, 15)]
    return first, second


def version_positions(dim: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    a = [(i // 3, dim - 11 + i % 3) for i in range(18)]
    b = [(dim - 11 + i % 3, i // 3) for i in range(18)]
    return a, b


@dataclass(frozen=True)
class Layout:
    version: int
    dim: int
    roles: np.ndarray  # (dim, dim) ModuleRole values
    base: np.ndarray  # (dim, dim) fixed function-pattern bits (format/version words excluded)
    data_order: np.ndarray  # (n_data, 2) data positions in zigzag order

    @property
    def n_data(self) -> int:
        return len(self.data_order)


@lru_cache(maxsize=None)
def layout(version: int) -> Layout:
    version = check_version(version)
    d = dim_of(version)
    roles = np.full((d, d), ModuleRole.DATA, dtype=np.int8)
    base = np.zeros((d, d), dtype=np.uint8)

    # timing first so finders and alignments overwrite the crossings
    roles[6, :] = ModuleRole.TIMING
    roles[:, 6] = ModuleRole.TIMING
    base[6, :] = (np.arange(d) % 2 == 0)
    base[:, 6] = (np.arange(d) % 2 == 0)

    for r0, c0 in finder_origins(version):
        for dr in range(-1, 8):
            for dc in range(-1, 8):
                r, c = r0 + dr, c0 + dc
                if 0 <= r < d and 0 <= c < d:
                    roles[r, c] = ModuleRole.FINDER
                    ring = max(abs(dr - 3), abs(dc - 3))
                    base[r, c] = ring in (0, 1, 3)

    for r0, c0 in alignment_centers(version):
        for dr in range(-2, 3):
            for dc in range(-2, 3):
                roles[r0 + dr, c0 + dc] = ModuleRole.ALIGNMENT
                base[r0 + dr, c0 + dc] = max(abs(dr), abs(dc)) != 1

    first, second = format_positions(d)
    for r, c in first + second:
        roles[r, c] = ModuleRole.FORMAT_REGION
    roles[d - 8, 8] = ModuleRole.FORMAT_REGION
    base[d - 8, 8] = 1
    if version >= 7:
        a, b = version_positions(d)
        for r, c in a + b:
            roles[r, c] = ModuleRole.FORMAT_REGION

    is_data = roles == ModuleRole.DATA
    chunks = []
    right = d - 1
    while right >= 1:
        if right == 6:
            right = 5
        upward = ((right + 1) & 2) == 0
        rows = np.arange(d)[::-1] if upward else np.arange(d)
        rr = np.repeat(rows, 2)
        cc = np.tile([right, right - 1], d)
        keep = is_data[rr, cc]
        chunks.append(np.stack([rr[keep], cc[keep]], axis=1))
        right -= 2
    data_order = np.concatenate(chunks).astype(np.int64)

    for arr in (roles, base, data_order):
        arr.setflags(write=False)
    return Layout(version, d, roles, base, data_order)


def function_bits(version: int, level: str, n_layers: int) -> np.ndarray:
    """One layer's non-data modules: fixed patterns plus its format and version words."""
    lay = layout(version)
    bits = lay.base.copy()
    word = format_word(level, n_layers)
    first, second = format_positions(lay.dim)
    for i in range(15):
        bit = (word >> i) & 1
        bits[first[i]] = bit
        bits[second[i]] = bit
    if version >= 7:
        vw = version_word(version)
        a, b = version_positions(lay.dim)
        for i in range(18):
            bits[a[i]] = bits[b[i]] = (vw >> i) & 1
    return bits
