from .codebook import ColorCodebook, build_codebook, nearest_palette
from .container import dumps, load, loads, save
from .layout import ModuleRole, dim_of, layout, version_of
from .placement import Placement, placement
from .symbol import (
    DEFAULT_SEED,
    FormatInfo,
    HiqSymbol,
    assemble_symbol,
    capacity_table,
    encode,
    paint_patterns,
    read_format,
)


def randomize_placement(data_bits, version, level, seed, layer=0):
    """Place a layer bitstream with the seeded permutation; returns (matrix bits, Placement)."""
    import numpy as np

    pl = placement(version, level, seed, layer, True)
    matrix = np.zeros((dim_of(version),) * 2, dtype=np.uint8)
    return pl.place(np.asarray(data_bits, dtype=np.uint8), matrix), pl


def derandomize(matrix, pl: Placement):
    return pl.read(matrix)


__all__ = [
    "ColorCodebook", "build_codebook", "nearest_palette", "dumps", "load", "loads", "save",
    "ModuleRole", "dim_of", "layout", "version_of", "Placement", "placement",
    "DEFAULT_SEED", "FormatInfo", "HiqSymbol", "assemble_symbol", "capacity_table", "encode",
    "paint_patterns", "read_format", "randomize_placement", "derandomize",
]
