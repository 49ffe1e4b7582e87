"""Bit-tuple <-> color codebooks and the fixed pattern palette."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InvalidParameter

MAX_LAYERS = 4

WHITE = (1.0, 1.0, 1.0)
BLACK = (0.0, 0.0, 0.0)
RED = (1.0, 0.0, 0.0)
GREEN = (0.0, 1.0, 0.0)
BLUE = (0.0, 0.0, 1.0)
CYAN = (0.0, 1.0, 1.0)
MAGENTA = (1.0, 0.0, 1.0)
YELLOW = (1.0, 1.0, 0.0)

# The eight corners of the RGB cube; spatial-pattern colors are matched against these.
PATTERN_PALETTE = {
    "white": WHITE, "black": BLACK, "red": RED, "green": GREEN,
    "blue": BLUE, "cyan": CYAN, "magenta": MAGENTA, "yellow": YELLOW,
}
FINDER_CORES = ("red", "green", "blue")
ALIGNMENT_CORE = "magenta"
# Outer finder ring color announces the layer count.
RING_BY_LAYERS = {1: "black", 2: "magenta", 3: "cyan", 4: "yellow"}
LAYERS_BY_RING = {v: k for k, v in RING_BY_LAYERS.items()}


def finder_core_names(n_layers: int) -> tuple[str, str, str]:
    return ("black",) * 3 if n_layers == 1 else FINDER_CORES


def alignment_core_name(n_layers: int) -> str:
    return "black" if n_layers == 1 else ALIGNMENT_CORE


def nearest_palette(rgb, names=None) -> str:
    names = tuple(names or PATTERN_PALETTE)
    table = np.array([PATTERN_PALETTE[n] for n in names])
    d = np.sum((table - np.asarray(rgb, dtype=float)) ** 2, axis=1)
    return names[int(np.argmin(d))]


def _color_of(bits: tuple[int, ...]) -> tuple[float, float, float]:
    n = len(bits)
    if n == 1:
        v = 1.0 - bits[0]
        return (v, v, v)
    if n == 2:
        # layer 1 removes red, layer 2 removes green and blue
        return (1.0 - bits[0], 1.0 - bits[1], 1.0 - bits[1])
    if n == 3:
        return tuple(1.0 - b for b in bits)
    # n == 4: two bits per channel, layer c is the high bit, layer 4 the low bit
    lo = bits[3]
    return tuple(1.0 - (2 * b + lo) / 3.0 for b in bits[:3])


@dataclass(frozen=True)
class ColorCodebook:
    """Bijection between n-bit module tuples and RGB colors.

    Class index ``k`` reads the tuple as a binary number with layer 1 as the
    most significant bit, so ``(1, 1, 0)`` is class 6.
    """

    n_layers: int
    colors: np.ndarray  # (2**n, 3)

    @property
    def K(self) -> int:
        return 1 << self.n_layers

    def tuple_of(self, k: int) -> tuple[int, ...]:
        n = self.n_layers
        return tuple((k >> (n - 1 - i)) & 1 for i in range(n))

    def index_of(self, bits) -> int:
        k = 0
        for b in bits:
            k = (k << 1) | int(b)
        return k

    def color(self, bits) -> np.ndarray:
        return self.colors[self.index_of(bits)]

    def bits_table(self) -> np.ndarray:
        """(K, n) array of bit tuples in class order."""
        return np.array([self.tuple_of(k) for k in range(self.K)], dtype=np.uint8)

    def classes_from_layers(self, layers: np.ndarray) -> np.ndarray:
        """Stacked (n, ...) bit planes -> class indices."""
        k = np.zeros(layers.shape[1:], dtype=np.int64)
        for plane in layers:
            k = (k << 1) | plane.astype(np.int64)
        return k

    def layers_from_classes(self, k: np.ndarray) -> np.ndarray:
        n = self.n_layers
        return np.stack([(k >> (n - 1 - i)) & 1 for i in range(n)]).astype(np.uint8)

    def map(self, layers: np.ndarray) -> np.ndarray:
        return self.colors[self.classes_from_layers(layers)]

    def unmap(self, rgb: np.ndarray) -> np.ndarray:
        """Nearest-color inverse; exact on codebook colors."""
        rgb = np.asarray(rgb, dtype=float)
        d = ((rgb[..., None, :] - self.colors) ** 2).sum(-1)
        return self.layers_from_classes(np.argmin(d, axis=-1))


@lru_cache(maxsize=None)
def build_codebook(n_layers: int) -> ColorCodebook:
    if not isinstance(n_layers, (int, np.integer)) or not 1 <= n_layers <= MAX_LAYERS:
        raise InvalidParameter(f"n_layers must be in 1..{MAX_LAYERS}, got {n_layers!r}")
    n = int(n_layers)
    tuples = [tuple((k >> (n - 1 - i)) & 1 for i in range(n)) for k in range(1 << n)]
    colors = np.array([_color_of(t) for t in tuples], dtype=float)
    colors.setflags(write=False)
    return ColorCodebook(n, colors)
