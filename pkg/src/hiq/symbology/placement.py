"""Mapping of a layer's codeword bitstream onto data modules.

Two placements exist. The randomized one draws a permutation of the data
positions from PCG64 seeded with ``SeedSequence([seed, version, layer])``
and then repairs it so that consecutive bits of one RS block never land in
the same 8x8-module window when an alternative exists. The sequential one
writes the blocks one after another in zigzag order, which keeps every
block packed into a local area; it exists as the ablation baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..ecc import EcLevel, block_layout, codeword_owner
from ..errors import CapacityExceeded
from .layout import layout

WINDOW = 8
_REPAIR_TRIES = 64


@dataclass(frozen=True)
class Placement:
    """positions[k] is the (row, col) of stream bit k; block_of[k] its RS block (-1: remainder)."""

    version: int
    positions: np.ndarray  # (n_bits, 2)
    block_of: np.ndarray  # (n_bits,)
    bit_index: np.ndarray  # (n_bits,) index of the bit inside its block codeword

    def place(self, bits: np.ndarray, into: np.ndarray) -> np.ndarray:
        if len(bits) != len(self.positions):
            raise CapacityExceeded(f"expected {len(self.positions)} bits, got {len(bits)}")
        into[self.positions[:, 0], self.positions[:, 1]] = bits
        return into

    def read(self, matrix: np.ndarray) -> np.ndarray:
        return matrix[self.positions[:, 0], self.positions[:, 1]]


def _stream_owners(version: int, level: EcLevel) -> tuple[np.ndarray, np.ndarray]:
    lay = layout(version)
    owners = np.array(codeword_owner(version, level), dtype=np.int64)
    n_bits = lay.n_data
    block_of = np.full(n_bits, -1, dtype=np.int64)
    bit_index = np.full(n_bits, -1, dtype=np.int64)
    n_cw = len(owners)
    k = np.arange(n_cw * 8)
    block_of[: n_cw * 8] = owners[k // 8, 0]
    bit_index[: n_cw * 8] = owners[k // 8, 1] * 8 + k % 8
    return block_of, bit_index


def _neighbors(block_of: np.ndarray, bit_index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """prev/next stream index of the same block in block-bit order (-1 if none)."""
    n = len(block_of)
    prev = np.full(n, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    valid = np.flatnonzero(block_of >= 0)
    order = valid[np.lexsort((bit_index[valid], block_of[valid]))]
    same = block_of[order[1:]] == block_of[order[:-1]]
    a, b = order[:-1][same], order[1:][same]
    nxt[a] = b
    prev[b] = a
    return prev, nxt


def _repair(perm_pos: np.ndarray, block_of, bit_index, rng: np.random.Generator) -> None:
    """Swap positions until no two consecutive bits of a block share a window."""
    prev, nxt = _neighbors(block_of, bit_index)
    win = (perm_pos[:, 0] // WINDOW) * 1000 + perm_pos[:, 1] // WINDOW
    n = len(win)

    def clashes(k: int) -> bool:
        return (prev[k] >= 0 and win[prev[k]] == win[k]) or (nxt[k] >= 0 and win[nxt[k]] == win[k])

    has_next = nxt >= 0
    bad = np.flatnonzero(has_next & (win == np.where(has_next, win[np.maximum(nxt, 0)], -1)))
    for a in bad:
        k = nxt[a]
        if win[a] != win[k]:
            continue  # already fixed by an earlier swap
        for _ in range(_REPAIR_TRIES):
            j = int(rng.integers(n))
            if j == k or win[j] == win[k]:
                continue
            win[k], win[j] = win[j], win[k]
            if clashes(k) or clashes(j):
                win[k], win[j] = win[j], win[k]
                continue
            perm_pos[[k, j]] = perm_pos[[j, k]]
            break


@lru_cache(maxsize=512)
def placement(version: int, level: EcLevel | str, seed: int, layer: int, randomize: bool = True) -> Placement:
    level = EcLevel.parse(level)
    lay = layout(version)
    block_of, bit_index = _stream_owners(version, level)
    if randomize:
        ss = np.random.SeedSequence([int(seed) & (2**64 - 1), version, layer])
        rng = np.random.Generator(np.random.PCG64(ss))
        pos = lay.data_order[rng.permutation(lay.n_data)].copy()
        _repair(pos, block_of, bit_index, rng)
    else:
        # block-contiguous: stream order sorted by (block, bit), remainder bits last
        key = np.where(block_of >= 0, block_of, block_layout(version, level).num_blocks)
        order = np.lexsort((bit_index, key))
        pos = np.empty_like(lay.data_order)
        pos[order] = lay.data_order
    pos.setflags(write=False)
    return Placement(version, pos, block_of, bit_index)


def bytes_to_bits(data: bytes, n_bits: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    out = np.zeros(n_bits, dtype=np.uint8)
    out[: len(bits)] = bits
    return out


def bits_to_bytes(bits: np.ndarray, n_bytes: int) -> bytes:
    return np.packbits(np.asarray(bits[: n_bytes * 8], dtype=np.uint8)).tobytes()
