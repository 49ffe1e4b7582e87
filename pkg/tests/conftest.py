"""Shared fixtures: small symbols and a classifier that reads clean renders."""

from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import settings

from hiq.colorrec import train_qda
from hiq.geometry import neighbor_stack, sample_centers
from hiq.raster import render
from hiq.symbology import encode

settings.register_profile("hiq", deadline=None, max_examples=50)
settings.load_profile("hiq")


def clean_training_set(n_layers: int, version: int = 5, noise: float = 0.02, seed: int = 0):
    """(X, y) over the data modules of one clean render, with small Gaussian jitter."""
    sym = encode(b"training", n_layers, None, version)
    img = render(sym, 4, 4)
    X = neighbor_stack(sample_centers(img, np.linalg.inv(img.homography), sym.dim)).reshape(-1, 5, 3)
    rng = np.random.default_rng(seed)
    X = np.clip(X + rng.normal(0, noise, X.shape), 0, 2)
    keep = ~sym.pattern_mask().ravel()
    return X[keep], sym.classes().ravel()[keep]


_MODELS: dict = {}


def clean_model(n_layers: int):
    """QDA that decodes undistorted renders; cached per layer count."""
    if n_layers not in _MODELS:
        X, y = clean_training_set(n_layers)
        _MODELS[n_layers] = train_qda(X, y, n_layers)
    return _MODELS[n_layers]


@pytest.fixture
def model_for():
    return clean_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, whatever the capture mode."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(results):
        parts = results[criterion]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {criterion:>2}: {status}")
        for part, ok, detail in parts:
            terminalreporter.write_line(f"    {'ok ' if ok else 'no '} {part}: {detail}")
