"""Layered SVM classifiers: one binary SVM per layer, optionally with a learned mixing vector.

LSVM-CMI alternates, per layer, between a standard SVM on x_hat = X^T theta
(theta fixed) and projected subgradient descent on the hinge sum over theta
(w, b fixed), projecting onto the unit ball after every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import linprog

from ..errors import InsufficientData
from .config import TrainConfig
from .qda import _mix
from .svm import CubicForm, feature_map, primal_objective, solve_svm

E1 = np.array([1.0, 0.0, 0.0, 0.0, 0.0])


@dataclass
class LsvmLayer:
    kernel: str
    w: np.ndarray
    b: float
    theta: np.ndarray
    history: list = field(default_factory=list)
    converged: bool = True

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        xh = np.swapaxes(X, -1, -2) @ self.theta if X.shape[-2:] == (5, 3) else X
        return feature_map(self.kernel, xh) @ self.w + self.b


@dataclass
class LsvmModel:
    layers: list
    n_layers: int
    C: float = 1.0
    kind: str = "lsvm"
    evaluations: int = field(default=0, compare=False)

    def predict_bits(self, X: np.ndarray, skip_layers=()) -> np.ndarray:
        """(n, ...) bit planes; skipped layers are left as 0 and cost nothing."""
        X = np.asarray(X, dtype=float)
        lead = X.shape[:-2] if X.shape[-2:] == (5, 3) else X.shape[:-1]
        out = np.zeros((self.n_layers,) + lead, dtype=np.uint8)
        count = int(np.prod(lead))
        for j, layer in enumerate(self.layers):
            if j in skip_layers:
                continue
            out[j] = layer.decision(X) > 0
            self.evaluations += count
        return out

    def predict(self, X: np.ndarray) -> tuple[int, ...]:
        bits = self.predict_bits(np.asarray(X)[None])[:, 0]
        return tuple(int(b) for b in bits)


def layer_bits(y: np.ndarray, n_layers: int, j: int) -> np.ndarray:
    return (np.asarray(y, dtype=np.int64) >> (n_layers - 1 - j)) & 1


def _check_layer(bits: np.ndarray, j: int) -> None:
    if bits.min() == bits.max():
        raise InsufficientData(f"layer {j + 1} has a single class in the training data")


def train_lsvm(X: np.ndarray, y: np.ndarray, n_layers: int,
               config: TrainConfig | None = None) -> LsvmModel:
    """n independent SVMs on center-row colors with theta fixed at e1."""
    cfg = config or TrainConfig()
    X = np.asarray(X, dtype=float)
    center = X[:, 0, :] if X.ndim == 3 else X
    layers = []
    for j in range(n_layers):
        bits = layer_bits(y, n_layers, j)
        _check_layer(bits, j)
        kernel = cfg.kernel_for(j)
        Z = feature_map(kernel, center)
        sol = solve_svm(Z, bits, cfg.C, cfg.svm_tol, cfg.svm_max_epochs)
        obj = primal_objective(Z, bits, sol.w, sol.b, cfg.C)
        layers.append(LsvmLayer(kernel, sol.w, sol.b, E1.copy(), [obj]))
    return LsvmModel(layers, n_layers, cfg.C, "lsvm")


def project_ball(theta: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(theta)
    return theta / norm if norm > 1.0 else theta


@numba.njit(cache=True)
def _hinge_kernel(X, s, c, g, A, T, theta, linear):
    n = X.shape[0]
    value = 0.0
    grad = np.zeros(5)
    x = np.zeros(3)
    ax = np.zeros(3)
    txx = np.zeros(3)
    dx = np.zeros(3)
    for i in range(n):
        for a in range(3):
            acc = 0.0
            for r in range(5):
                acc += X[i, r, a] * theta[r]
            x[a] = acc
        if linear:
            val = c + g[0] * x[0] + g[1] * x[1] + g[2] * x[2]
            for a in range(3):
                dx[a] = g[a]
        else:
            # c + x.(g + A x + T(x, x)), gradient g + 2 A x + 3 T(x, x)
            val = c
            for a in range(3):
                acc_a = 0.0
                acc_t = 0.0
                for b in range(3):
                    acc_a += A[a, b] * x[b]
                    for d in range(3):
                        acc_t += T[a, b, d] * x[b] * x[d]
                ax[a] = acc_a
                txx[a] = acc_t
                val += x[a] * (g[a] + acc_a + acc_t)
                dx[a] = g[a] + 2.0 * acc_a + 3.0 * acc_t
        m = s[i] * val
        if m < 1.0:
            value += 1.0 - m
            for r in range(5):
                acc = 0.0
                for a in range(3):
                    acc += X[i, r, a] * dx[a]
                grad[r] -= s[i] * acc
    return value, grad


def hinge_subgradient(X, s, form: CubicForm, theta) -> tuple[float, np.ndarray]:
    """Hinge sum and a subgradient with respect to theta, for a fixed decision function.

    ``X`` holds (N, 5, 3) observations and ``s`` the signed labels 2 y - 1.
    """
    value, grad = _hinge_kernel(X, s, form.c, form.g, form.A, form.T,
                                 np.asarray(theta, dtype=float), form.is_linear)
    return float(value), grad


def theta_descent(X, s, form: CubicForm, theta, steps: int, eta: float) -> tuple[np.ndarray, float]:
    """Projected normalized-subgradient descent on the hinge sum; returns the best iterate."""
    best_theta = theta.copy()
    best_val, grad = hinge_subgradient(X, s, form, theta)
    for t in range(1, steps + 1):
        gnorm = np.linalg.norm(grad)
        if gnorm == 0.0:
            break
        theta = project_ball(theta - eta / np.sqrt(t) * grad / gnorm)
        val, grad = hinge_subgradient(X, s, form, theta)
        if val < best_val:
            best_val, best_theta = val, theta.copy()
    return best_theta, best_val


def _train_layer_cmi(X, bits, kernel, cfg: TrainConfig) -> LsvmLayer:
    theta = E1.copy()
    X = np.ascontiguousarray(X, dtype=float)
    signs = 2.0 * bits - 1.0
    Z = feature_map(kernel, X[:, 0, :])
    sol = solve_svm(Z, bits, cfg.C, cfg.svm_tol, cfg.svm_max_epochs)
    w, b, alpha = sol.w, sol.b, sol.alpha
    history = [primal_objective(Z, bits, w, b, cfg.C)]
    converged = False
    for _ in range(cfg.max_iters):
        # step 3: SVM with theta fixed (keep the old solution if it is not better)
        Z = feature_map(kernel, _mix(X, theta))
        sol = solve_svm(Z, bits, cfg.C, cfg.svm_tol, cfg.svm_max_epochs, alpha0=alpha)
        if primal_objective(Z, bits, sol.w, sol.b, cfg.C) <= primal_objective(Z, bits, w, b, cfg.C):
            w, b, alpha = sol.w, sol.b, sol.alpha
        # step 4: theta with (w, b) fixed
        form = CubicForm.from_weights(kernel, w, b)
        theta, _ = theta_descent(X, signs, form, theta, cfg.inner_steps, cfg.eta)
        Z = feature_map(kernel, _mix(X, theta))
        obj = primal_objective(Z, bits, w, b, cfg.C)
        prev = history[-1]
        history.append(min(obj, prev))
        if prev - obj < cfg.tol * max(1.0, abs(prev)):
            converged = True
            break
    return LsvmLayer(kernel, w, b, theta, history, converged)


def train_lsvm_cmi(X: np.ndarray, y: np.ndarray, n_layers: int,
                   config: TrainConfig | None = None) -> LsvmModel:
    cfg = config or TrainConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[1:] != (5, 3):
        raise InsufficientData("LSVM-CMI needs full 5x3 feature blocks")
    layers = []
    for j in range(n_layers):
        bits = layer_bits(y, n_layers, j)
        _check_layer(bits, j)
        layers.append(_train_layer_cmi(X, bits.astype(float), cfg.kernel_for(j), cfg))
    return LsvmModel(layers, n_layers, cfg.C, "lsvm-cmi")


def simplex_vertices(dim: int = 5) -> np.ndarray:
    """Vertices of {theta >= 0, e^T theta = 1} found by enumerating active sets."""
    verts = []
    for free in range(dim):
        A = np.vstack([np.ones(dim), np.delete(np.eye(dim), free, axis=0)])
        rhs = np.zeros(dim)
        rhs[0] = 1.0
        v = np.linalg.solve(A, rhs)
        if (v >= -1e-12).all():
            verts.append(v)
    return np.array(verts)


def lagrangian_theta_cost(X, bits, w, b, lam) -> np.ndarray:
    """Linear coefficient c such that the theta-part of the Lagrangian is c^T theta (linear kernel)."""
    s = 2.0 * np.asarray(bits, dtype=float) - 1.0
    return -np.einsum("i,i,irc,c->r", lam, s, X, w)


def vertex_witness(X, bits, w, b, lam) -> dict:
    """Optimize the Lagrangian over the simplex by vertex enumeration and by an LP solver."""
    c = lagrangian_theta_cost(X, bits, w, b, lam)
    verts = simplex_vertices(len(c))
    vals = verts @ c
    best = verts[np.argmin(vals)]
    lp = linprog(c, A_eq=np.ones((1, len(c))), b_eq=[1.0], bounds=[(0, None)] * len(c), method="highs")
    return {"theta_vertex": best, "value_vertex": float(vals.min()),
            "theta_lp": lp.x, "value_lp": float(lp.fun)}
