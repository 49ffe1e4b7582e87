"""Homography estimation from pattern correspondences and per-module sampling.

The estimated matrix H maps image points to grid points (x' ~ H x). Each
correspondence contributes the two rows

    [ 0^T      -x^T    y' x^T ]
    [ x^T       0^T   -x' x^T ]

scaled by its weight; H is the right singular vector of the stacked matrix
for the smallest singular value. Points are Hartley-normalized before
stacking and the result is mapped back, then scaled to unit Frobenius norm
with h9 >= 0 (h8 >= 0 on a tie).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateConfiguration, FrameRejected, InvalidParameter
from .raster import RasterImage, apply_homography, bilinear_sample

FINDER_WEIGHT = 0.6
ALIGNMENT_WEIGHT = 0.4
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class Correspondence:
    image: tuple[float, float]
    grid: tuple[float, float]
    weight: float = 1.0
    kind: str = "finder"

    def __post_init__(self):
        if not self.weight > 0:
            raise InvalidParameter("correspondence weight must be > 0")


@dataclass(frozen=True)
class FeatureBlock:
    """One module's 5x3 observation, rows [center, top, bottom, left, right]."""

    X: np.ndarray
    position: tuple[int, int]


def canonical(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    H = H / np.linalg.norm(H)
    flat = H.ravel()
    if flat[8] < 0 or (flat[8] == 0 and flat[7] < 0):
        H = -H
    return H


def _normalizer(pts: np.ndarray) -> np.ndarray:
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    s = np.sqrt(2) / d if d > 0 else 1.0
    return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])


def design_matrix(src: np.ndarray, dst: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Stacked weighted 2N x 9 system A with A h = 0 for x' ~ H x."""
    n = len(src)
    x = np.column_stack([src, np.ones(n)])
    A = np.zeros((2 * n, 9))
    A[0::2, 3:6] = -x
    A[0::2, 6:9] = dst[:, 1:2] * x
    A[1::2, 0:3] = x
    A[1::2, 6:9] = -dst[:, 0:1] * x
    return A * np.repeat(weights, 2)[:, None]


def _collinear(pts: np.ndarray, tol: float = 1e-9) -> bool:
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[-1] <= tol * max(s[0], 1e-300)


def solve_weighted(src, dst, weights, normalize: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Returns (H, singular values of the stacked system)."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    w = np.asarray(weights, dtype=float)
    if len(src) < 4 or len(src) != len(dst) or len(w) != len(src):
        raise DegenerateConfiguration("need at least 4 matching correspondences")
    if _collinear(src) or _collinear(dst):
        raise DegenerateConfiguration("all points are collinear")
    if normalize:
        T, Tp = _normalizer(src), _normalizer(dst)
        s_n = (T @ np.column_stack([src, np.ones(len(src))]).T).T[:, :2]
        d_n = (Tp @ np.column_stack([dst, np.ones(len(dst))]).T).T[:, :2]
    else:
        T = Tp = np.eye(3)
        s_n, d_n = src, dst
    A = design_matrix(s_n, d_n, w)
    _, sv, vt = np.linalg.svd(A)
    if len(sv) < 8 or sv[7] <= _RANK_TOL * sv[0]:
        raise DegenerateConfiguration("stacked system has rank < 8")
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.solve(Tp, Hn @ T)
    return canonical(H), sv


def homography_from_points(src, dst) -> np.ndarray:
    """Unweighted DLT for src -> dst (used for synthetic warps)."""
    return solve_weighted(src, dst, np.ones(len(src)))[0]


def homography_4pt(corrs: Sequence[Correspondence]) -> np.ndarray:
    """Exact homography from exactly four correspondences, no three collinear."""
    if len(corrs) != 4:
        raise InvalidParameter("homography_4pt needs exactly 4 correspondences")
    src = np.array([c.image for c in corrs], dtype=float)
    dst = np.array([c.grid for c in corrs], dtype=float)
    for pts in (src, dst):
        for drop in range(4):
            if _collinear(np.delete(pts, drop, axis=0)):
                raise DegenerateConfiguration("three of the four points are collinear")
    return solve_weighted(src, dst, np.ones(4))[0]


def default_weight(kind: str) -> float:
    return FINDER_WEIGHT if kind == "finder" else ALIGNMENT_WEIGHT


def estimate_rgt(corrs: Sequence[Correspondence], normalize: bool = True) -> np.ndarray:
    """Weighted over-determined homography (image -> grid) from N >= 4 correspondences."""
    src = np.array([c.image for c in corrs], dtype=float)
    dst = np.array([c.grid for c in corrs], dtype=float)
    w = np.array([c.weight for c in corrs], dtype=float)
    return solve_weighted(src, dst, w, normalize)[0]


def reprojection_error(H: np.ndarray, corrs: Sequence[Correspondence]) -> np.ndarray:
    """Grid-space distance between H(image point) and the grid point, per correspondence."""
    src = np.array([c.image for c in corrs], dtype=float)
    dst = np.array([c.grid for c in corrs], dtype=float)
    gx, gy = apply_homography(H, src[:, 0], src[:, 1])
    return np.hypot(gx - dst[:, 0], gy - dst[:, 1])


def module_centers(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid coordinates (x, y) of all module centers, shaped (dim, dim) as [row, col]."""
    r, c = np.mgrid[0:dim, 0:dim]
    return c + 0.5, r + 0.5


def project_centers(H_img_to_grid: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    G = np.linalg.inv(H_img_to_grid)
    gx, gy = module_centers(dim)
    return apply_homography(G, gx, gy)


def neighbor_stack(center: np.ndarray) -> np.ndarray:
    """(dim, dim, 3) center samples -> (dim, dim, 5, 3); off-grid neighbors replicate the center."""
    dim = center.shape[0]
    out = np.empty((dim, dim, 5, 3))
    out[:, :, 0] = center
    out[:, :, 1] = center
    out[1:, :, 1] = center[:-1]
    out[:, :, 2] = center
    out[:-1, :, 2] = center[1:]
    out[:, :, 3] = center
    out[:, 1:, 3] = center[:, :-1]
    out[:, :, 4] = center
    out[:, :-1, 4] = center[:, 1:]
    return out


def sample_centers(img: RasterImage, H: np.ndarray, dim: int) -> np.ndarray:
    """Raw bilinear sample at every module center; H maps image -> grid."""
    x, y = project_centers(H, dim)
    if (x < 0).any() or (y < 0).any() or (x > img.width).any() or (y > img.height).any():
        raise FrameRejected("a module center projects outside the image")
    return bilinear_sample(img.pixels, x, y)


def sample_modules(img: RasterImage, H: np.ndarray, dim: int, white) -> np.ndarray:
    """White-normalized (dim, dim, 5, 3) feature blocks for every module."""
    from .colorrec.white import normalize_white

    raw = sample_centers(img, H, dim)
    return neighbor_stack(normalize_white(raw, white))


def feature_block(features: np.ndarray, row: int, col: int) -> FeatureBlock:
    return FeatureBlock(features[row, col], (row, col))
