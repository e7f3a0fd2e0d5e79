"""Model serialization: one JSON document per trained network.

Layout:

    {
      "format": "phasornet-model/1",
      "projection": {"kind": ..., "seed": ..., "dim": ..., ...},
      "layers": [{"in": ..., "out": ..., "dropout": ...,
                  "weights": [row-major reals]}],
      "n_classes": ...,
      "meta": {...}
    }

Floats are written with repr semantics (17 significant digits), so a
save/load round trip reproduces every weight bit-for-bit.  Loading
validates the dimension chain and names the first offending field.
"""

import json
from pathlib import Path

import numpy as np

from .network import DenseLayer, PhasorClassifier
from .projection import projection_from_config

MODEL_FORMAT = "phasornet-model/1"


def save_model(clf, path):
    """Write a fitted PhasorClassifier to `path` as JSON."""
    if not hasattr(clf, "layers_"):
        raise ValueError("classifier is not fitted")
    doc = {
        "format": MODEL_FORMAT,
        "projection": clf.projection_.to_config(),
        "layers": [
            {
                "in": layer.in_dim,
                "out": layer.out_dim,
                "dropout": layer.dropout_rate,
                "weights": layer.weights.ravel().tolist(),
            }
            for layer in clf.layers_
        ],
        "n_classes": int(clf.n_classes_),
        "meta": {
            "classes": clf.classes_.tolist(),
            "params": clf.get_params(),
            "history": getattr(clf, "history_", []),
        },
    }
    Path(path).write_text(json.dumps(doc))
    return path


def _require(doc, key, kind, where="model"):
    if key not in doc:
        raise ValueError(f"{where}.{key} is missing")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ValueError(f"{where}.{key} has the wrong type")
    return value


def load_model(path):
    """Read a model JSON back into a fitted PhasorClassifier."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ValueError(f"malformed model file {path}: {err}") from err
    if not isinstance(doc, dict):
        raise ValueError("model document must be a JSON object")
    fmt = _require(doc, "format", str)
    if fmt != MODEL_FORMAT:
        raise ValueError(f"format: expected {MODEL_FORMAT!r}, got {fmt!r}")

    projection = projection_from_config(_require(doc, "projection", dict))
    n_classes = _require(doc, "n_classes", int)
    if n_classes < 1:
        raise ValueError("n_classes must be positive")

    raw_layers = _require(doc, "layers", list)
    if not raw_layers:
        raise ValueError("layers: at least one layer required")
    layers = []
    expected_in = projection.n_features_in_
    for i, raw in enumerate(raw_layers):
        where = f"layers[{i}]"
        d_in = _require(raw, "in", int, where)
        d_out = _require(raw, "out", int, where)
        if d_in != expected_in:
            raise ValueError(
                f"{where}.in: dimension chain broken (expected {expected_in}, got {d_in})"
            )
        flat = np.asarray(_require(raw, "weights", list, where), dtype=float)
        if flat.size != d_in * d_out:
            raise ValueError(
                f"{where}.weights: expected {d_in * d_out} values, got {flat.size}"
            )
        if not np.all(np.isfinite(flat)):
            raise ValueError(f"{where}.weights: non-finite value")
        layers.append(DenseLayer(flat.reshape(d_out, d_in), float(raw.get("dropout", 0.0))))
        expected_in = d_out
    if layers[-1].out_dim != n_classes:
        raise ValueError(
            f"layers[-1].out: dimension chain broken (expected {n_classes} classes, "
            f"got {layers[-1].out_dim})"
        )

    meta = doc.get("meta", {})
    params = meta.get("params", {})
    if "hidden" in params:  # JSON has no tuples
        params["hidden"] = tuple(params["hidden"])
    clf = PhasorClassifier(**params) if params else PhasorClassifier()
    clf.projection_ = projection
    clf.layers_ = layers
    clf.classes_ = np.asarray(meta.get("classes", list(range(n_classes))))
    clf.n_features_in_ = projection.n_features_in_
    clf.history_ = meta.get("history", [])
    return clf
