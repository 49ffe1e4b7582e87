"""HiqSymbol assembly, pattern painting, payload encoding and format reading."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..ecc import EcLevel, block_layout, interleave, rs_encode
from ..errors import CapacityExceeded, FormatUnreadable, InvalidParameter, LayerMismatch
from .codebook import (
    LAYERS_BY_RING,
    MAX_LAYERS,
    PATTERN_PALETTE,
    RING_BY_LAYERS,
    ColorCodebook,
    alignment_core_name,
    build_codebook,
    finder_core_names,
)
from .layout import alignment_centers, dim_of, finder_origins, function_bits, layout, version_of
from .placement import bytes_to_bits, placement

DEFAULT_SEED = 0x48695121C0DE2018


@dataclass(frozen=True)
class FormatInfo:
    n_layers: int
    ec_levels: tuple[EcLevel, ...]
    version: int

    def __post_init__(self):
        if len(self.ec_levels) != self.n_layers:
            raise InvalidParameter("ec_levels length must equal n_layers")


@dataclass(frozen=True)
class HiqSymbol:
    layers: np.ndarray  # (n, dim, dim) uint8
    format: FormatInfo
    seed: int = DEFAULT_SEED
    randomized: bool = True
    painted: bool = False
    codebook: ColorCodebook = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "codebook", build_codebook(self.format.n_layers))
        self.layers.setflags(write=False)

    @property
    def n_layers(self) -> int:
        return self.format.n_layers

    @property
    def version(self) -> int:
        return self.format.version

    @property
    def dim(self) -> int:
        return self.layers.shape[1]

    @property
    def identity(self) -> tuple[int, int, int]:
        return (self.version, self.n_layers, self.seed)

    def classes(self) -> np.ndarray:
        """(dim, dim) class index of every module's bit tuple."""
        return self.codebook.classes_from_layers(self.layers)

    def pattern_mask(self) -> np.ndarray:
        """Modules whose color is overridden by pattern painting."""
        mask = np.zeros((self.dim, self.dim), dtype=bool)
        if not self.painted:
            return mask
        for r0, c0 in finder_origins(self.version):
            mask[r0:r0 + 7, c0:c0 + 7] = True
        for r, c in alignment_centers(self.version):
            mask[r - 2:r + 3, c - 2:c + 3] = True
        return mask

    def module_colors(self) -> np.ndarray:
        """(dim, dim, 3) presented color of every module."""
        colors = self.codebook.map(self.layers).copy()
        if not self.painted:
            return colors
        n = self.n_layers
        ring = PATTERN_PALETTE[RING_BY_LAYERS[n]]
        for (r0, c0), core in zip(finder_origins(self.version), finder_core_names(n)):
            for dr in range(7):
                for dc in range(7):
                    level = max(abs(dr - 3), abs(dc - 3))
                    colors[r0 + dr, c0 + dc] = {
                        3: ring, 2: PATTERN_PALETTE["white"]
                    }.get(level, PATTERN_PALETTE[core])
        acore = PATTERN_PALETTE[alignment_core_name(n)]
        for r, c in alignment_centers(self.version):
            colors[r - 2:r + 3, c - 2:c + 3] = PATTERN_PALETTE["black"]
            colors[r - 1:r + 2, c - 1:c + 2] = PATTERN_PALETTE["white"]
            colors[r, c] = acore
        return colors


def paint_patterns(symbol: HiqSymbol) -> HiqSymbol:
    """Colorize finder and alignment patterns; geometry is untouched."""
    return symbol if symbol.painted else replace(symbol, painted=True)


def assemble_symbol(
    layers: Sequence[np.ndarray],
    ec_levels: Sequence[EcLevel | str],
    seed: int = DEFAULT_SEED,
    randomized: bool = True,
) -> HiqSymbol:
    if len(layers) == 0 or len(layers) > MAX_LAYERS:
        raise InvalidParameter(f"need 1..{MAX_LAYERS} layers, got {len(layers)}")
    if len(layers) != len(ec_levels):
        raise LayerMismatch(f"{len(layers)} layers but {len(ec_levels)} ec levels")
    arrs = [np.asarray(layer, dtype=np.uint8) for layer in layers]
    dim = arrs[0].shape[0]
    for a in arrs:
        if a.shape != (dim, dim):
            raise LayerMismatch(f"layer shape {a.shape} differs from ({dim}, {dim})")
        if a.max(initial=0) > 1:
            raise InvalidParameter("layer bits must be 0 or 1")
    fmt = FormatInfo(len(arrs), tuple(EcLevel.parse(e) for e in ec_levels), version_of(dim))
    return paint_patterns(HiqSymbol(np.stack(arrs), fmt, int(seed), bool(randomized)))


def split_payload(payload: bytes, version: int, ec_levels: Sequence[EcLevel]) -> list[bytes]:
    caps = [block_layout(version, lv).max_payload for lv in ec_levels]
    if len(payload) > sum(caps):
        raise CapacityExceeded(
            f"payload of {len(payload)} bytes exceeds {sum(caps)} for version {version} "
            f"with levels {','.join(lv.value for lv in ec_levels)}",
            max_payload=sum(caps),
        )
    parts, pos = [], 0
    for cap in caps:
        parts.append(payload[pos:pos + cap])
        pos += cap
    return parts


def layer_bits(segment: bytes, version: int, level: EcLevel, n_layers: int,
               seed: int, layer: int, randomized: bool = True) -> np.ndarray:
    lay = layout(version)
    blocks = rs_encode(segment, level, version, layer_id=layer)
    stream = bytes_to_bits(interleave(blocks), lay.n_data)
    matrix = function_bits(version, level.value, n_layers)
    return placement(version, level, seed, layer, randomized).place(stream, matrix)


def encode(
    payload: bytes,
    n_layers: int = 3,
    ec_levels: Sequence[EcLevel | str] | str | None = None,
    version: int = 40,
    seed: int = DEFAULT_SEED,
    randomized: bool = True,
) -> HiqSymbol:
    """Encode ``payload`` into an n-layer symbol of the given version."""
    build_codebook(n_layers)
    if ec_levels is None:
        ec_levels = ["L"] * n_layers
    elif isinstance(ec_levels, str):
        ec_levels = ec_levels.split(",")
    levels = [EcLevel.parse(e) for e in ec_levels]
    if len(levels) != n_layers:
        raise LayerMismatch(f"{n_layers} layers but {len(levels)} ec levels")
    parts = split_payload(bytes(payload), version, levels)
    layers = [layer_bits(p, version, lv, n_layers, seed, i, randomized)
              for i, (p, lv) in enumerate(zip(parts, levels))]
    return assemble_symbol(layers, levels, seed, randomized)


def capacity_table(version: int, n_layers: int) -> dict[str, int]:
    return {lv.value: n_layers * block_layout(version, lv).max_payload for lv in EcLevel}


def vote_layers(ring_names: Sequence[str]) -> int:
    """n_layers from the three finder ring colors, 2-of-3 majority."""
    votes = [LAYERS_BY_RING.get(name) for name in ring_names]
    counts = Counter(v for v in votes if v is not None)
    if not counts:
        raise FormatUnreadable("no finder ring carries a valid layer-count color")
    value, count = counts.most_common(1)[0]
    if count < 2:
        raise FormatUnreadable(f"finder rings disagree: {list(ring_names)}")
    return value


def read_format(source, version: int | None = None) -> FormatInfo:
    """Recover FormatInfo from a symbol or from detected patterns.

    ``source`` is either a HiqSymbol (ring colors and format words are read
    from its module colors) or any object with ``ring_colors`` (finder ring
    palette names) and ``layer_bits`` ((n, dim, dim) predicted bits).
    """
    from .layout import decode_format_word, format_positions

    if isinstance(source, HiqSymbol):
        colors = source.module_colors()
        from .codebook import nearest_palette

        rings = [nearest_palette(colors[r0, c0]) for r0, c0 in finder_origins(source.version)]
        bits = source.layers
        version = source.version
    else:
        rings = list(source.ring_colors)
        bits = source.layer_bits
        version = version or version_of(bits.shape[1])
    n = vote_layers(rings)
    if bits.shape[0] < n:
        raise FormatUnreadable(f"{bits.shape[0]} layer planes for {n} layers")
    first, second = format_positions(dim_of(version))
    levels = []
    for plane in bits[:n]:
        decoded = None
        for positions in (first, second):
            word = sum(int(plane[p]) << i for i, p in enumerate(positions))
            cand = decode_format_word(word)
            if cand is not None and (decoded is None or cand[2] < decoded[2]):
                decoded = cand
        if decoded is None:
            raise FormatUnreadable("format word beyond correction in both copies")
        levels.append(EcLevel.parse(decoded[0]))
    return FormatInfo(n, tuple(levels), version)
