from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    kernels: tuple | None = None  # per layer "linear" | "poly3"; None = linear for layers 1-2, poly3 beyond
    max_iters: int = 50
    tol: float = 1e-6
    eta: float = 0.1  # projected-subgradient step eta / sqrt(t)
    inner_steps: int = 200
    eps: float = 1e-6  # covariance ridge
    augment_count: int = 5
    sigma_w: float = 0.03
    svm_tol: float = 0.1
    svm_max_epochs: int = 1000
    theta_constraint: str = "sum"

    def kernel_for(self, layer: int) -> str:
        if self.kernels is not None:
            return self.kernels[layer]
        return "linear" if layer < 2 else "poly3"
