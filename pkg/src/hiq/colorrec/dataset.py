"""Labeled color samples from rendered symbols with known geometry."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ..geometry import neighbor_stack, sample_centers
from ..raster import CorpusItem
from .white import augment_noisy_white, estimate_white


def raw_blocks(item: CorpusItem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unnormalized (dim, dim, 5, 3) blocks, labels, and estimated white for one item."""
    H = np.linalg.inv(item.homography)
    dim = item.symbol.dim
    W = estimate_white(item.image, H, dim)
    blocks = neighbor_stack(sample_centers(item.image, H, dim))
    return blocks, item.labels, W


def collect_samples(items: Iterable[CorpusItem], augment_count: int = 5, sigma_w: float = 0.03,
                    per_image: int | None = None, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) over all data modules of ``items``; X is (N, 5, 3) white-normalized.

    ``per_image`` caps the number of modules drawn from each image before
    augmentation; None keeps every module.
    """
    rng = np.random.default_rng(seed)
    Xs, ys = [], []
    for item in items:
        blocks, labels, W = raw_blocks(item)
        keep = labels.ravel() >= 0
        raw = blocks.reshape(-1, 5, 3)[keep]
        lab = labels.ravel()[keep]
        if per_image is not None and per_image < len(raw):
            pick = np.sort(rng.choice(len(raw), per_image, replace=False))
            raw, lab = raw[pick], lab[pick]
        X, y = augment_noisy_white(raw, lab, W, augment_count, sigma_w, rng)
        Xs.append(X)
        ys.append(y)
    return np.concatenate(Xs), np.concatenate(ys).astype(np.int64)
