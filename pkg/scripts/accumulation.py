"""Frames to a complete payload with and without spatial randomization under clustered 8x8 corruption.

Usage: python scripts/accumulation.py [--versions 10 40] [--windows 2 4 8] [--sessions 200]
"""

import argparse

import numpy as np

from hiq.ecc import block_layout
from hiq.pipeline import corrupt_windows, frames_until_complete
from hiq.symbology import encode
from hiq.symbology.layout import layout


def frames_needed(version: int, n_layers: int, level: str, windows: int, sessions: int, randomized: bool,
                  flip: float, region: int | None, max_frames: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    protect = layout(version).roles != 0
    cap = n_layers * block_layout(version, level).max_payload
    counts = []
    for s in range(sessions):
        data = rng.integers(0, 256, cap, dtype=np.uint8).tobytes()
        sym = encode(data, n_layers, [level] * n_layers, version, seed=1000 + s, randomized=randomized)

        def frames(sym=sym):
            while True:
                yield corrupt_windows(sym.layers, windows, rng, protect=protect, flip=flip, region=region)

        counts.append(frames_until_complete(sym, frames(), max_frames))
    return np.array(counts)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--versions", type=int, nargs="+", default=[10, 40])
    ap.add_argument("--layers", type=int, default=1)
    ap.add_argument("--level", default="L")
    ap.add_argument("--windows", type=int, nargs="+", default=[2, 4, 8])
    ap.add_argument("--sessions", type=int, default=200)
    ap.add_argument("--flip", type=float, default=0.5)
    ap.add_argument("--region", type=int, default=24, help="0 = windows anywhere on the symbol")
    ap.add_argument("--max-frames", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    print("version windows  median_on  median_off  mean_on  mean_off")
    for v in args.versions:
        for w in args.windows:
            res = {r: frames_needed(v, args.layers, args.level, w, args.sessions, r, args.flip,
                                    args.region or None, args.max_frames, args.seed) for r in (True, False)}
            print(f"{v:>7} {w:>7} {np.median(res[True]):10g} {np.median(res[False]):11g}"
                  f" {res[True].mean():8.2f} {res[False].mean():9.2f}", flush=True)


if __name__ == "__main__":
    main()
