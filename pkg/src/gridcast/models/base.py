"""Shared regressor contract, model registry, and versioned serialization.

Every model fits on a normalized training table and predicts normalized
targets; denormalization is the harness's job.  ``warmup`` is the number
of leading rows of a predict() input that receive no prediction (0 for
row-wise models, the window length for sequence models).
"""

from __future__ import annotations

import base64
import dataclasses
import json

import numpy as np

from ..errors import DataError, GridcastError
from ..numeric import Rng

__all__ = ["Regressor", "MODEL_KINDS", "make_model", "default_config",
           "save_model", "load_model", "model_to_bytes", "model_from_bytes"]

MAGIC = "GRIDCAST-MODEL"
FORMAT_VERSION = 1


class Regressor:
    """Base class for the six regressors.

    Subclasses set ``kind`` and implement ``_fit(X, y, rng)``,
    ``_predict(X)``, ``get_state()`` and ``set_state(state)``.
    """

    kind: str = ""
    warmup: int = 0

    def __init__(self, config, seed: int):
        self.config = config
        self.seed = int(seed)
        self.feature_names: list[str] | None = None
        self.fitted = False

    def fit(self, X: np.ndarray, y: np.ndarray, feature_names: list[str]):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise DataError(f"{self.kind}: empty training set")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{self.kind}: X/y row mismatch")
        self.feature_names = list(feature_names)
        self._fit(X, y, Rng(self.seed))
        self.fitted = True
        return self

    def predict(self, X: np.ndarray, feature_names: list[str] | None = None) -> np.ndarray:
        """Predict normalized targets.  Returns one value per row after the
        first ``warmup`` rows."""
        if not self.fitted:
            raise GridcastError(f"{self.kind}: model not fitted")
        X = np.asarray(X, dtype=np.float64)
        if feature_names is not None and self.feature_names is not None:
            if list(feature_names) != self.feature_names:
                missing = [c for c in self.feature_names if c not in feature_names]
                raise DataError(
                    f"{self.kind}: schema mismatch, missing columns: {missing}"
                )
        if self.feature_names is not None and X.shape[1] != len(self.feature_names):
            raise DataError(
                f"{self.kind}: expected {len(self.feature_names)} features, "
                f"got {X.shape[1]}"
            )
        return self._predict(X)

    def _fit(self, X, y, rng: Rng):
        raise NotImplementedError

    def _predict(self, X) -> np.ndarray:
        raise NotImplementedError

    def get_state(self) -> dict:
        raise NotImplementedError

    def set_state(self, state: dict) -> None:
        raise NotImplementedError


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {
            "__array__": True,
            "dtype": str(obj.dtype),
            "shape": list(obj.shape),
            "data": base64.b64encode(np.ascontiguousarray(obj).tobytes()).decode("ascii"),
        }
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if obj.get("__array__"):
            raw = base64.b64decode(obj["data"])
            return np.frombuffer(raw, dtype=obj["dtype"]).reshape(obj["shape"]).copy()
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def model_to_bytes(model: Regressor) -> bytes:
    doc = {
        "magic": MAGIC,
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "seed": model.seed,
        "config": dataclasses.asdict(model.config),
        "feature_names": model.feature_names,
        "warmup": model.warmup,
        "state": _encode(model.get_state()),
    }
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def model_from_bytes(blob: bytes) -> Regressor:
    try:
        doc = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise DataError("corrupt model artifact") from None
    if doc.get("magic") != MAGIC:
        raise DataError("not a model artifact (bad magic header)")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format version: {doc.get('version')}")
    kind = doc["kind"]
    if kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind: {kind}")
    config_cls, model_cls = MODEL_KINDS[kind]
    model = model_cls(config_cls(**doc["config"]), doc["seed"])
    model.feature_names = doc["feature_names"]
    model.set_state(_decode(doc["state"]))
    model.fitted = True
    return model


def save_model(model: Regressor, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> Regressor:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from None
    return model_from_bytes(blob)


def _registry():
    # Imported lazily to avoid circular imports at module load.
    from .exact_boosting import GbrtConfig, GbrtModel
    from .histogram_boosting import LightGbmConfig, LightGbmModel
    from .oblivious_boosting import CatBoostConfig, CatBoostModel
    from .svr import SvrConfig, SvrModel
    from .recurrent import AwmLstmConfig, AwmLstmModel, LstmConfig, LstmModel

    return {
        "awmlstm": (AwmLstmConfig, AwmLstmModel),
        "catboost": (CatBoostConfig, CatBoostModel),
        "gbrt": (GbrtConfig, GbrtModel),
        "lstm": (LstmConfig, LstmModel),
        "lightgbm": (LightGbmConfig, LightGbmModel),
        "svr": (SvrConfig, SvrModel),
    }


class _LazyRegistry(dict):
    def _ensure(self):
        if not super().__len__():
            super().update(_registry())

    def __getitem__(self, key):
        self._ensure()
        return super().__getitem__(key)

    def __contains__(self, key):
        self._ensure()
        return super().__contains__(key)

    def __iter__(self):
        self._ensure()
        return super().__iter__()

    def keys(self):
        self._ensure()
        return super().keys()

    def __len__(self):
        self._ensure()
        return super().__len__()


MODEL_KINDS = _LazyRegistry()


def default_config(kind: str, overrides: dict | None = None):
    if kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind: {kind}")
    config_cls, _ = MODEL_KINDS[kind]
    cfg = config_cls()
    if overrides:
        valid = {f.name for f in dataclasses.fields(config_cls)}
        bad = set(overrides) - valid
        if bad:
            raise DataError(f"unknown config keys for {kind}: {sorted(bad)}")
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def make_model(kind: str, seed: int, overrides: dict | None = None) -> Regressor:
    _, model_cls = MODEL_KINDS[kind]
    return model_cls(default_config(kind, overrides), seed)
