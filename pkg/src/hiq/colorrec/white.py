"""White estimation, white normalization and noisy-white augmentation."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidWhite, WhiteEstimationFailure
from ..raster import RasterImage, apply_homography, bilinear_sample
from ..symbology.layout import finder_origins, version_of

WHITE_EPS = 1e-6
MIN_WHITE_SAMPLES = 8


def normalize_white(I, W, eps: float = WHITE_EPS) -> np.ndarray:
    """Componentwise I / W clamped to [0, 2]."""
    W = np.asarray(W, dtype=float)
    if W.shape[-1] != 3 or (W <= eps).any():
        raise InvalidWhite(f"white estimate must be > {eps} per channel, got {W}")
    return np.clip(np.asarray(I, dtype=float) / W, 0.0, 2.0)


def white_grid_points(dim: int) -> np.ndarray:
    """Grid points that are white by construction: first quiet-zone ring, separators, finder white rings."""
    pts = []
    edge = np.arange(dim) + 0.5
    pts += [(x, -0.5) for x in edge] + [(x, dim + 0.5) for x in edge]
    pts += [(-0.5, y) for y in edge] + [(dim + 0.5, y) for y in edge]
    version = version_of(dim)
    for r0, c0 in finder_origins(version):
        for k in range(-1, 8):
            for r, c in ((r0 - 1, c0 + k), (r0 + 7, c0 + k), (r0 + k, c0 - 1), (r0 + k, c0 + 7)):
                if 0 <= r < dim and 0 <= c < dim:
                    pts.append((c + 0.5, r + 0.5))
        for k in range(1, 6):
            for r, c in ((r0 + 1, c0 + k), (r0 + 5, c0 + k), (r0 + k, c0 + 1), (r0 + k, c0 + 5)):
                pts.append((c + 0.5, r + 0.5))
    return np.unique(np.array(pts), axis=0)


def estimate_white(img: RasterImage, H: np.ndarray, dim: int) -> np.ndarray:
    """Mean color of the structurally white modules; H maps image -> grid."""
    pts = white_grid_points(dim)
    G = np.linalg.inv(H)
    x, y = apply_homography(G, pts[:, 0], pts[:, 1])
    inside = (x >= 0) & (y >= 0) & (x <= img.width) & (y <= img.height)
    samples = bilinear_sample(img.pixels, x[inside], y[inside])
    if len(samples) == 0:
        raise WhiteEstimationFailure("no white sampling point falls inside the image")
    lum = samples.mean(axis=1)
    valid = samples.min(axis=1) > 0.1
    if valid.any():
        valid &= lum >= 0.8 * np.percentile(lum[valid], 90)
    if valid.sum() < MIN_WHITE_SAMPLES:
        raise WhiteEstimationFailure(f"only {int(valid.sum())} usable white samples")
    return samples[valid].mean(axis=0)


def augment_noisy_white(raw, labels, W, count: int = 5, sigma_w: float = 0.03,
                        seed: int | np.random.Generator = 0) -> tuple[np.ndarray, np.ndarray]:
    """Original normalized samples plus ``count`` copies normalized by W + N(0, sigma_w^2 W^2).

    ``raw`` holds unnormalized observations (N, 5, 3) or (N, 3); each copy of
    a sample uses its own independent white draw for all of its rows.
    """
    if count > 0 and not sigma_w > 0:
        raise InvalidWhite("sigma_w must be > 0")
    raw = np.asarray(raw, dtype=float)
    labels = np.asarray(labels)
    W = np.asarray(W, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    feats = [normalize_white(raw, W)]
    n = len(raw)
    for _ in range(count):
        noisy = W + rng.normal(size=(n, 3)) * sigma_w * W
        noisy = np.maximum(noisy, WHITE_EPS * 10)
        shape = (n,) + (1,) * (raw.ndim - 2) + (3,)
        feats.append(np.clip(raw / noisy.reshape(shape), 0.0, 2.0))
    return np.concatenate(feats), np.tile(labels, count + 1)
