"""QDA and QDA-CMI color classifiers.

Both models score the estimated true color x_hat = X^T theta of a 5x3
observation X against K Gaussian classes with uniform priors. Plain QDA
fixes theta = e1 (center module only). QDA-CMI alternates the Gaussian MLE
given theta with the closed-form theta update given the Gaussians.

The objective tracked during training is the covariance-ridged
log-likelihood

    sum_k [ -N_k/2 (log|S_k| + 3 log 2pi) - 1/2 sum_i d_ik - N_k eps/2 tr(S_k^-1) ]

whose exact maximizer in S_k is the sample covariance plus eps I, so each
half-step of the alternation is an exact ascent step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientData
from .config import TrainConfig

E1 = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
LOG_2PI = np.log(2 * np.pi)


@dataclass
class QdaModel:
    means: np.ndarray  # (K, 3)
    covs: np.ndarray  # (K, 3, 3)
    theta: np.ndarray  # (5,)
    n_layers: int
    eps: float = 1e-6
    kind: str = "qda"
    history: list = field(default_factory=list)
    converged: bool = True
    evaluations: int = field(default=0, compare=False)

    @property
    def K(self) -> int:
        return len(self.means)

    def __post_init__(self):
        self._prep()

    def _prep(self):
        self._chol = np.linalg.cholesky(self.covs)
        self._logdet = 2 * np.log(np.diagonal(self._chol, axis1=1, axis2=2)).sum(axis=1)

    def true_color(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-2:] == (5, 3):
            return np.swapaxes(X, -1, -2) @ self.theta
        return X  # already a 3-vector feature

    def discriminants(self, X: np.ndarray) -> np.ndarray:
        """(..., K) values of -1/2 log|S_k| - 1/2 Mahalanobis^2."""
        xh = self.true_color(X)
        flat = xh.reshape(-1, 3)
        out = np.empty((len(flat), self.K))
        for k in range(self.K):
            diff = flat - self.means[k]
            z = np.linalg.solve(self._chol[k], diff.T)
            out[:, k] = -0.5 * self._logdet[k] - 0.5 * (z * z).sum(axis=0)
        self.evaluations += len(flat) * self.K
        return out.reshape(xh.shape[:-1] + (self.K,))

    def predict_classes(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.discriminants(X), axis=-1)

    def predict_bits(self, X: np.ndarray, skip_layers=()) -> np.ndarray:
        """(n, ...) predicted bit planes; QDA couples layers, so every layer is always evaluated."""
        k = self.predict_classes(X)
        n = self.n_layers
        return np.stack([(k >> (n - 1 - i)) & 1 for i in range(n)]).astype(np.uint8)

    def predict(self, X: np.ndarray) -> tuple[int, tuple[int, ...]]:
        """Single FeatureBlock -> (class k, bit tuple)."""
        k = int(self.predict_classes(np.asarray(X)[None])[0])
        n = self.n_layers
        return k, tuple((k >> (n - 1 - i)) & 1 for i in range(n))


def _mix(X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return np.swapaxes(X, 1, 2) @ theta


def _check_classes(y: np.ndarray, K: int, min_count: int = 4) -> np.ndarray:
    counts = np.bincount(y, minlength=K)[:K]
    missing = [k for k in range(K) if counts[k] < min_count]
    if missing:
        raise InsufficientData(f"classes with fewer than {min_count} samples: {missing}")
    return counts


def _gaussians(xh: np.ndarray, y: np.ndarray, K: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    means = np.zeros((K, 3))
    covs = np.zeros((K, 3, 3))
    for k in range(K):
        pts = xh[y == k]
        means[k] = pts.mean(axis=0)
        d = pts - means[k]
        covs[k] = d.T @ d / len(pts) + eps * np.eye(3)
    return means, covs


def penalized_loglik(xh, y, means, covs, eps) -> float:
    total = 0.0
    for k in range(len(means)):
        pts = xh[y == k]
        prec = np.linalg.inv(covs[k])
        d = pts - means[k]
        maha = float(((d @ prec) * d).sum())
        _, logdet = np.linalg.slogdet(covs[k])
        nk = len(pts)
        total += -0.5 * nk * (logdet + 3 * LOG_2PI) - 0.5 * maha - 0.5 * nk * eps * np.trace(prec)
    return float(total)


def train_qda(X: np.ndarray, y: np.ndarray, n_layers: int, eps: float = 1e-6) -> QdaModel:
    """Per-class mean/covariance of center-row features, theta fixed at e1."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    K = 1 << n_layers
    _check_classes(y, K)
    xh = X[:, 0, :] if X.ndim == 3 else X
    means, covs = _gaussians(xh, y, K, eps)
    model = QdaModel(means, covs, E1.copy(), n_layers, eps, "qda")
    model.history = [penalized_loglik(xh, y, means, covs, eps)]
    return model


def theta_update(X, y, means, covs, constraint: str = "sum") -> np.ndarray | None:
    """Maximize the quadratic term over theta with the Gaussians fixed.

    ``constraint="sum"`` enforces e^T theta = 1 through a Lagrange multiplier;
    ``"none"`` is the unconstrained stationary point. Returns None when the
    5x5 normal matrix is singular.
    """
    A = np.zeros((5, 5))
    b = np.zeros(5)
    for k in range(len(means)):
        Xk = X[y == k]
        P = np.linalg.inv(covs[k])
        XP = Xk @ P
        A += XP.transpose(1, 0, 2).reshape(5, -1) @ Xk.transpose(1, 0, 2).reshape(5, -1).T
        b += Xk.sum(axis=0) @ P @ means[k]
    if np.linalg.cond(A) > 1e12:
        return None
    Ainv_b = np.linalg.solve(A, b)
    if constraint == "none":
        return Ainv_b
    e = np.ones(5)
    Ainv_e = np.linalg.solve(A, e)
    nu = (1.0 - e @ Ainv_b) / (e @ Ainv_e)
    return Ainv_b + nu * Ainv_e


def train_qda_cmi(X: np.ndarray, y: np.ndarray, n_layers: int,
                  config: TrainConfig | None = None) -> QdaModel:
    """Alternating maximization over (means, covariances) and theta."""
    cfg = config or TrainConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 3 or X.shape[1:] != (5, 3):
        raise InsufficientData("QDA-CMI needs full 5x3 feature blocks")
    K = 1 << n_layers
    _check_classes(y, K)
    eps = cfg.eps

    theta = E1.copy()
    xh = _mix(X, theta)
    means, covs = _gaussians(xh, y, K, eps)
    history = [penalized_loglik(xh, y, means, covs, eps)]
    converged = False
    for _ in range(cfg.max_iters):
        new_theta = theta_update(X, y, means, covs, cfg.theta_constraint)
        if new_theta is None:
            converged = True  # degenerate: keep the previous theta
            break
        theta = new_theta
        xh = _mix(X, theta)
        means, covs = _gaussians(xh, y, K, eps)
        history.append(penalized_loglik(xh, y, means, covs, eps))
        if abs(history[-1] - history[-2]) <= cfg.tol * max(1.0, abs(history[-1])):
            converged = True
            break
    return QdaModel(means, covs, theta, n_layers, eps, "qda-cmi", history, converged)
