from .config import TrainConfig
from .dataset import collect_samples, raw_blocks
from .lsvm import LsvmLayer, LsvmModel, train_lsvm, train_lsvm_cmi
from .model_io import load_model, save_model
from .qda import QdaModel, train_qda, train_qda_cmi
from .white import augment_noisy_white, estimate_white, normalize_white

METHODS = ("qda", "lsvm", "qda-cmi", "lsvm-cmi")


def train(method: str, X, y, n_layers: int, config: TrainConfig | None = None):
    """Dispatch to the trainer for ``method``."""
    cfg = config or TrainConfig()
    if method == "qda":
        return train_qda(X, y, n_layers, cfg.eps)
    if method == "qda-cmi":
        return train_qda_cmi(X, y, n_layers, cfg)
    if method == "lsvm":
        return train_lsvm(X, y, n_layers, cfg)
    if method == "lsvm-cmi":
        return train_lsvm_cmi(X, y, n_layers, cfg)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def predict_qda(model: QdaModel, X):
    return model.predict(X)


def predict_lsvm(model: LsvmModel, X):
    return model.predict(X)


__all__ = [
    "METHODS", "LsvmLayer", "LsvmModel", "QdaModel", "TrainConfig", "augment_noisy_white",
    "collect_samples", "estimate_white", "load_model", "normalize_white", "predict_lsvm",
    "predict_qda", "raw_blocks", "save_model", "train", "train_lsvm", "train_lsvm_cmi",
    "train_qda", "train_qda_cmi",
]
