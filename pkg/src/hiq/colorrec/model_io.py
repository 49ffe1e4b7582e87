"""Plain-text model files.

Line-oriented ``key values...`` records; floats are written with ``repr`` so
loading reproduces every value bit-for-bit.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import InvalidParameter
from .lsvm import LsvmLayer, LsvmModel
from .qda import QdaModel

MAGIC = "hiq-model"
FORMAT_VERSION = 1


def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def dumps(model) -> str:
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"kind {model.kind}", f"n_layers {model.n_layers}"]
    if isinstance(model, QdaModel):
        lines += [f"K {model.K}", f"eps {model.eps!r}", f"theta {_floats(model.theta)}",
                  f"converged {int(model.converged)}", f"history {_floats(model.history)}"]
        for k in range(model.K):
            lines.append(f"mean {k} {_floats(model.means[k])}")
            lines.append(f"cov {k} {_floats(model.covs[k])}")
    elif isinstance(model, LsvmModel):
        lines.append(f"C {model.C!r}")
        for j, layer in enumerate(model.layers):
            lines += [f"layer {j} kernel {layer.kernel}",
                      f"layer {j} b {layer.b!r}",
                      f"layer {j} w {_floats(layer.w)}",
                      f"layer {j} theta {_floats(layer.theta)}",
                      f"layer {j} converged {int(layer.converged)}",
                      f"layer {j} history {_floats(layer.history)}"]
    else:
        raise InvalidParameter(f"cannot serialize {type(model).__name__}")
    return "\n".join(lines) + "\n"


def _arr(tokens) -> np.ndarray:
    return np.array([float(t) for t in tokens])


def loads(text: str):
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or rows[0][0] != MAGIC:
        raise InvalidParameter("not a model file")
    if int(rows[0][1]) != FORMAT_VERSION:
        raise InvalidParameter(f"unsupported model format version {rows[0][1]}")
    head = {r[0]: r[1:] for r in rows[1:] if r[0] not in ("mean", "cov", "layer")}
    kind = head["kind"][0]
    n = int(head["n_layers"][0])
    if kind.startswith("qda"):
        K = int(head["K"][0])
        means = np.zeros((K, 3))
        covs = np.zeros((K, 3, 3))
        for r in rows:
            if r[0] == "mean":
                means[int(r[1])] = _arr(r[2:])
            elif r[0] == "cov":
                covs[int(r[1])] = _arr(r[2:]).reshape(3, 3)
        return QdaModel(means, covs, _arr(head["theta"]), n, float(head["eps"][0]), kind,
                        list(_arr(head.get("history", []))), bool(int(head.get("converged", ["1"])[0])))
    fields: dict[int, dict] = {}
    for r in rows:
        if r[0] == "layer":
            fields.setdefault(int(r[1]), {})[r[2]] = r[3:]
    layers = []
    for j in range(n):
        f = fields[j]
        layers.append(LsvmLayer(f["kernel"][0], _arr(f["w"]), float(f["b"][0]), _arr(f["theta"]),
                                list(_arr(f.get("history", []))), bool(int(f.get("converged", ["1"])[0]))))
    return LsvmModel(layers, n, float(head["C"][0]), kind)


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(dumps(model))


def load_model(path: str | Path):
    return loads(Path(path).read_text())
