"""Binary soft-margin SVM via dual coordinate descent, plus explicit kernel maps.

The bias is folded into the weight vector by appending a constant feature,
so the solver works on the box-constrained dual

    min_a  1/2 a^T Q a - e^T a,   0 <= a_i <= C,   Q_ij = s_i s_j z_i^T z_j

with s_i = 2 y_i - 1. Coordinates are swept in a fixed order (no random
permutation), which keeps training bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations
from math import factorial

import numba
import numpy as np

KERNELS = ("linear", "poly3")
BIAS_FEATURE = 1.0


def _poly3_exponents() -> tuple[np.ndarray, np.ndarray]:
    """Exponent table and coefficients so that phi(x).phi(y) = (x.y + 1)^3."""
    exps, coefs = [], []
    for deg in range(4):
        for combo in combinations_with_replacement(range(3), deg):
            a = np.bincount(np.array(combo, dtype=int), minlength=3) if combo else np.zeros(3, int)
            rest = 3 - deg
            multinom = factorial(3) / (factorial(rest) * np.prod([factorial(int(v)) for v in a]))
            exps.append(a)
            coefs.append(np.sqrt(multinom))
    return np.array(exps), np.array(coefs)


POLY3_EXP, POLY3_COEF = _poly3_exponents()


def feature_dim(kernel: str) -> int:
    return 3 if kernel == "linear" else len(POLY3_EXP)


def feature_map(kernel: str, x: np.ndarray) -> np.ndarray:
    """(..., 3) colors -> (..., d) explicit features."""
    x = np.asarray(x, dtype=float)
    if kernel == "linear":
        return x
    if kernel == "poly3":
        powers = x[..., None, :] ** POLY3_EXP  # (..., 20, 3)
        return POLY3_COEF * powers.prod(axis=-1)
    raise ValueError(f"unknown kernel {kernel!r}")


def feature_jacobian(kernel: str, x: np.ndarray) -> np.ndarray:
    """(..., d, 3) derivative of the feature map with respect to the color."""
    x = np.asarray(x, dtype=float)
    if kernel == "linear":
        return np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3))
    jac = np.empty(x.shape[:-1] + (len(POLY3_EXP), 3))
    for c in range(3):
        e = POLY3_EXP.copy()
        factor = e[:, c].astype(float)
        e[:, c] = np.maximum(e[:, c] - 1, 0)
        jac[..., c] = POLY3_COEF * factor * (x[..., None, :] ** e).prod(axis=-1)
    return jac


@numba.njit(cache=True)
def _dual_cd(Z, s, C, tol, max_epochs, alpha):
    n, d = Z.shape
    w = np.zeros(d)
    for i in range(n):
        if alpha[i] != 0.0:
            w += alpha[i] * s[i] * Z[i]
    qii = np.empty(n)
    for i in range(n):
        qii[i] = Z[i] @ Z[i]
    # active-set shrinking: bounded coordinates whose gradient points out of
    # the box are dropped until the remaining problem converges, then the
    # full set is re-checked once
    active = np.arange(n)
    n_active = n
    pg_max_old = np.inf
    pg_min_old = -np.inf
    epochs = 0
    while epochs < max_epochs:
        epochs += 1
        pg_max = -np.inf
        pg_min = np.inf
        k = 0
        while k < n_active:
            i = active[k]
            G = s[i] * (w @ Z[i]) - 1.0
            a = alpha[i]
            pg = 0.0
            if a == 0.0:
                if G > pg_max_old:
                    n_active -= 1
                    active[k], active[n_active] = active[n_active], active[k]
                    continue
                if G < 0.0:
                    pg = G
            elif a == C:
                if G < pg_min_old:
                    n_active -= 1
                    active[k], active[n_active] = active[n_active], active[k]
                    continue
                if G > 0.0:
                    pg = G
            else:
                pg = G
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
            if pg != 0.0 and qii[i] > 0.0:
                new = min(max(a - G / qii[i], 0.0), C)
                delta = new - a
                if delta != 0.0:
                    alpha[i] = new
                    w += delta * s[i] * Z[i]
            k += 1
        if pg_max - pg_min <= tol:
            if n_active == n:
                break
            active = np.arange(n)
            n_active = n
            pg_max_old = np.inf
            pg_min_old = -np.inf
            continue
        pg_max_old = pg_max if pg_max > 0.0 else np.inf
        pg_min_old = pg_min if pg_min < 0.0 else -np.inf
    return w, epochs


@dataclass
class SvmSolution:
    w: np.ndarray
    b: float
    alpha: np.ndarray
    epochs: int


def solve_svm(Z: np.ndarray, y: np.ndarray, C: float = 1.0, tol: float = 0.1,
              max_epochs: int = 1000, alpha0: np.ndarray | None = None) -> SvmSolution:
    """Soft-margin SVM on explicit features Z (N, d) with bit labels y in {0, 1}."""
    Z = np.asarray(Z, dtype=float)
    Za = np.ascontiguousarray(np.column_stack([Z, np.full(len(Z), BIAS_FEATURE)]))
    s = 2.0 * np.asarray(y, dtype=float) - 1.0
    alpha = np.zeros(len(Z)) if alpha0 is None else np.clip(np.array(alpha0, dtype=float), 0.0, C)
    w, epochs = _dual_cd(Za, s, float(C), float(tol), int(max_epochs), alpha)
    return SvmSolution(w[:-1].copy(), float(w[-1] * BIAS_FEATURE), alpha, int(epochs))


def hinge_terms(Z: np.ndarray, y: np.ndarray, w: np.ndarray, b: float) -> np.ndarray:
    s = 2.0 * np.asarray(y, dtype=float) - 1.0
    return np.maximum(0.0, 1.0 - s * (Z @ w + b))


def primal_objective(Z, y, w, b, C) -> float:
    """1/2 (|w|^2 + b^2) + C sum hinge; the b^2 term comes from the folded bias."""
    return float(0.5 * (w @ w + b * b) + C * hinge_terms(Z, y, w, b).sum())


@dataclass(frozen=True)
class CubicForm:
    """Decision function w.phi(x) + b written as c + g.x + x^T A x + T(x, x, x).

    A and T are symmetric, so the gradient is g + 2 A x + 3 T(x, x, .).
    """

    c: float
    g: np.ndarray
    A: np.ndarray
    T: np.ndarray

    @classmethod
    def from_weights(cls, kernel: str, w: np.ndarray, b: float) -> "CubicForm":
        g = np.zeros(3)
        A = np.zeros((3, 3))
        T = np.zeros((3, 3, 3))
        c = float(b)
        if kernel == "linear":
            return cls(c, np.asarray(w, dtype=float).copy(), A, T)
        for exp, coef, wm in zip(POLY3_EXP, POLY3_COEF, w):
            v = coef * wm
            idx = [ch for ch in range(3) for _ in range(exp[ch])]
            if len(idx) == 0:
                c += v
            elif len(idx) == 1:
                g[idx[0]] += v
            else:
                perms = set(permutations(idx))
                target = A if len(idx) == 2 else T
                for p in perms:
                    target[p] += v / len(perms)
        return cls(c, g, A, T)

    @property
    def is_linear(self) -> bool:
        return not (self.A.any() or self.T.any())

    def _terms(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        outer = (x[:, :, None] * x[:, None, :]).reshape(len(x), 9)
        return x @ self.A, outer @ self.T.reshape(9, 3)

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.value_and_grad(x)[0]

    def value_and_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.is_linear:
            return self.c + x @ self.g, np.broadcast_to(self.g, x.shape)
        Ax, Txx = self._terms(x)
        val = self.c + x @ self.g + (Ax * x).sum(-1) + (Txx * x).sum(-1)
        return val, self.g + 2 * Ax + 3 * Txx
