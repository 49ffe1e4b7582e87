"""Module-sampling error of the weighted N-point homography vs the 4-point fit under corner noise.

Usage: python scripts/rgt_noise.py [--version 40] [--points 4 6 10 16] [--sigma 0.5 1 2] [--trials 500]
"""

import argparse

import numpy as np

from hiq.geometry import ALIGNMENT_WEIGHT, FINDER_WEIGHT, Correspondence, estimate_rgt, homography_4pt, module_centers
from hiq.raster import apply_homography
from hiq.symbology.layout import alignment_centers, dim_of, finder_centers_grid


def correspondences(version: int, n_points: int, rng) -> np.ndarray:
    """Three finders, the bottom-right alignment, then random other alignments (grid x, y)."""
    align = np.array(alignment_centers(version), dtype=float)[:, ::-1] + 0.5
    far = int(np.argmax(align.sum(axis=1)))
    rest = np.delete(align, far, axis=0)
    extra = rest[rng.choice(len(rest), min(n_points - 4, len(rest)), replace=False)]
    return np.r_[finder_centers_grid(version), align[[far]], extra]


def trial(version: int, n_points: int, sigma: float, module_px: float, rng) -> tuple[float, float]:
    dim = dim_of(version)
    pts = correspondences(version, n_points, rng)
    H = np.array([[module_px, 0, 20], [0, module_px, 20], [0, 0, 1.0]])
    jitter = np.eye(3)
    jitter[:2] += rng.normal(0, 0.03, (2, 3))
    jitter[2, :2] = rng.normal(0, 2e-4, 2)
    H = H @ jitter
    ix, iy = apply_homography(H, pts[:, 0], pts[:, 1])
    ix, iy = ix + rng.normal(0, sigma, len(pts)), iy + rng.normal(0, sigma, len(pts))
    weights = [FINDER_WEIGHT] * 3 + [ALIGNMENT_WEIGHT] * (len(pts) - 3)
    corrs = [Correspondence((x, y), tuple(g), w) for x, y, g, w in zip(ix, iy, pts, weights)]
    gx, gy = (a.ravel() for a in module_centers(dim))
    tx, ty = apply_homography(H, gx, gy)
    errs = []
    for est in (estimate_rgt(corrs), homography_4pt(corrs[:4])):
        ex, ey = apply_homography(np.linalg.inv(est), gx, gy)
        errs.append(float(np.hypot(ex - tx, ey - ty).mean()))
    return errs[0], errs[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--version", type=int, default=40)
    ap.add_argument("--points", type=int, nargs="+", default=[4, 6, 10, 16, 24])
    ap.add_argument("--sigma", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--module-px", type=float, default=4.0)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("points  sigma  rgt_px  4pt_px  win_rate")
    for n in args.points:
        for sigma in args.sigma:
            rng = np.random.default_rng(args.seed)
            res = np.array([trial(args.version, n, sigma, args.module_px, rng) for _ in range(args.trials)])
            wins = float(np.mean(res[:, 0] < res[:, 1]))
            print(f"{n:>6} {sigma:6.2f} {res[:, 0].mean():7.3f} {res[:, 1].mean():7.3f} {wins:9.3f}", flush=True)


if __name__ == "__main__":
    main()
