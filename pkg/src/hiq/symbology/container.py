"""Plain-text symbol container.

::

    HIQ-SYMBOL 1
    version 40
    n_layers 3
    ec_levels L,L,M
    seed 5217053409826525208
    randomized 1
    layer 0
    0101...            (dim rows of dim characters)
    layer 1
    ...

Lines are LF-terminated ASCII, so the file is bit-exact across platforms.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import InvalidParameter
from .symbol import HiqSymbol, assemble_symbol

MAGIC = "HIQ-SYMBOL 1"


def dumps(symbol: HiqSymbol) -> str:
    lines = [
        MAGIC,
        f"version {symbol.version}",
        f"n_layers {symbol.n_layers}",
        "ec_levels " + ",".join(lv.value for lv in symbol.format.ec_levels),
        f"seed {symbol.seed}",
        f"randomized {int(symbol.randomized)}",
    ]
    for i, plane in enumerate(symbol.layers):
        lines.append(f"layer {i}")
        lines.extend("".join("1" if b else "0" for b in row) for row in plane)
    return "\n".join(lines) + "\n"


def loads(text: str) -> HiqSymbol:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise InvalidParameter("not a HIQ-SYMBOL container")
    header = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("layer "):
        key, _, value = lines[i].partition(" ")
        header[key] = value.strip()
        i += 1
    try:
        version = int(header["version"])
        n = int(header["n_layers"])
        levels = header["ec_levels"].split(",")
        seed = int(header["seed"])
        randomized = header.get("randomized", "1") == "1"
    except (KeyError, ValueError) as exc:
        raise InvalidParameter(f"bad container header: {exc}") from None
    dim = 17 + 4 * version
    planes = []
    for layer in range(n):
        if i >= len(lines) or lines[i].strip() != f"layer {layer}":
            raise InvalidParameter(f"missing 'layer {layer}' section")
        rows = lines[i + 1:i + 1 + dim]
        if len(rows) != dim or any(len(r) != dim for r in rows):
            raise InvalidParameter(f"layer {layer} is not {dim}x{dim}")
        planes.append(np.array([[c == "1" for c in r] for r in rows], dtype=np.uint8))
        i += 1 + dim
    return assemble_symbol(planes, levels, seed, randomized)


def save(symbol: HiqSymbol, path: str | Path) -> None:
    Path(path).write_text(dumps(symbol), encoding="ascii", newline="\n")


def load(path: str | Path) -> HiqSymbol:
    return loads(Path(path).read_text(encoding="ascii"))
