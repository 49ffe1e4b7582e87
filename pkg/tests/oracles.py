"""Slow direct reference implementations shared by the test modules."""

import numpy as np


def binarize_oracle(pixels):
    """Pixel-by-pixel reference: find the block, compute its thresholds, compare."""
    h, w, _ = pixels.shape
    ye = [round(h * i / 8) for i in range(9)]
    xe = [round(w * j / 8) for j in range(9)]
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        i = max(k for k in range(8) if ye[k] <= y)
        for x in range(w):
            j = max(k for k in range(8) if xe[k] <= x)
            blk = pixels[ye[i]:ye[i + 1], xe[j]:xe[j + 1]]
            t = []
            for c in range(3):
                hi, lo = blk[..., c].max(), blk[..., c].min()
                diffs = [abs(blk[r, q + 1, c] - blk[r, q, c])
                         for r in range(blk.shape[0]) for q in range(blk.shape[1] - 1)]
                sigma = float(np.median(diffs)) / (0.6745 * 2 ** 0.5) if len(diffs) >= 64 else 0.0
                t.append(lo if hi - lo <= 10 * sigma else (hi + lo) / 2)
            out[y, x] = any(pixels[y, x, c] < t[c] for c in range(3))
    return out
