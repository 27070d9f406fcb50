"""Python bindings for the Res-TCN wearable-signal pipeline.

Configuration travels as plain dicts and is validated by the C++ core; reports
come back as parsed JSON documents.
"""

import json

from . import _sma
from ._sma import (
    MODALITIES,
    ArgumentError,
    CorruptionError,
    FormatError,
    InvariantError,
    IoError,
    NotFoundError,
    ShapeError,
    SmaError,
    ValidationError,
    causal_conv1d,
    confusion,
    list_subjects,
    load_recording,
    map_label,
    save_recording,
    scores,
)

__all__ = [
    "MODALITIES",
    "ArgumentError",
    "CorruptionError",
    "FormatError",
    "InvariantError",
    "IoError",
    "NotFoundError",
    "ResTcn",
    "ShapeError",
    "SmaError",
    "ValidationError",
    "assess_risk",
    "build_dataset",
    "causal_conv1d",
    "confusion",
    "default_model_config",
    "gradcheck",
    "list_subjects",
    "load_recording",
    "map_label",
    "run_experiment",
    "run_suite",
    "save_recording",
    "scores",
]


def _dump(config):
    return "" if config is None else json.dumps(config)


def default_model_config():
    return json.loads(_sma.default_model_config())


class ResTcn:
    """Res-TCN classifier. `config` entries override the default architecture."""

    def __init__(self, config=None, *, _handle=None):
        if _handle is not None:
            self._m = _handle
            return
        merged = default_model_config()
        merged.update(config or {})
        self._m = _sma.ResTcn(json.dumps(merged))

    @property
    def config(self):
        return json.loads(self._m.config_json)

    @property
    def parameter_count(self):
        return self._m.parameter_count

    @property
    def receptive_field(self):
        return self._m.receptive_field

    def parameters(self):
        return self._m.parameters()

    def logits(self, x):
        return self._m.logits(x)

    def predict(self, x):
        """Returns (classes, probabilities)."""
        return self._m.predict(x)

    def fit(self, x, labels, seed=42):
        """Trains in place; returns the per-epoch mean loss."""
        return self._m.fit(x, labels, seed)

    def save(self, path):
        self._m.save(str(path))

    @classmethod
    def load(cls, path):
        return cls(_handle=_sma.ResTcn.load(str(path)))

    def to_bytes(self):
        return self._m.to_bytes()

    @classmethod
    def from_bytes(cls, data):
        return cls(_handle=_sma.ResTcn.from_bytes(data))


def build_dataset(root, modality, task, config=None):
    """Returns (windows[N, axes, T] float32, labels[N], subject ids, class count)."""
    return _sma.build_dataset(str(root), modality, task, _dump(config))


def run_experiment(root, config=None):
    return json.loads(_sma.run_experiment(str(root), _dump(config)))


def run_suite(root, config=None):
    """Returns (report document, rendered table)."""
    doc, table = _sma.run_suite(str(root), _dump(config))
    return json.loads(doc), table


def assess_risk(impact, accuracy, config=None):
    return _sma.assess_risk(impact, accuracy, _dump(config))


def gradcheck(seed=42):
    return [
        {"name": n, "max_rel_error": e, "tolerance": t, "passed": p}
        for n, e, t, p in _sma.gradcheck(seed)
    ]
