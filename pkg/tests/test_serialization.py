"""Model artifact round-trip tests for all six regressor kinds."""

import json

import numpy as np
import pytest

from gridcast.errors import DataError
from gridcast.models import (MODEL_KINDS, load_model, make_model,
                             model_from_bytes, model_to_bytes, save_model)
from gridcast.models.base import FORMAT_VERSION, MAGIC

from conftest import make_regression

SMALL = {
    "gbrt": {"n_trees": 5, "depth": 2},
    "lightgbm": {"n_trees": 5, "max_leaves": 4},
    "catboost": {"n_trees": 5, "depth": 2, "permutations": 2},
    "svr": {"max_passes": 5000},
    "lstm": {"hidden": 6, "epochs": 2, "window": 5, "batch_size": 16},
    "awmlstm": {"hidden": 6, "epochs": 2, "window": 5, "batch_size": 16,
                "attention_size": 4},
}


@pytest.mark.parametrize("kind", sorted(MODEL_KINDS))
def test_round_trip_bit_identical(kind, tmp_path):
    X, y = make_regression(60, 3, seed=1)
    names = ["f0", "f1", "f2"]
    model = make_model(kind, seed=11, overrides=SMALL[kind])
    model.fit(X, y, names)
    before = model.predict(X, names)

    path = tmp_path / f"{kind}.gcm"
    save_model(model, path)
    loaded = load_model(path)
    after = loaded.predict(X, names)
    np.testing.assert_array_equal(before, after)
    assert loaded.kind == kind


def test_magic_header_present():
    X, y = make_regression(40, 2, seed=2)
    model = make_model("gbrt", seed=0, overrides=SMALL["gbrt"])
    model.fit(X, y, ["f0", "f1"])
    doc = json.loads(model_to_bytes(model))
    assert doc["magic"] == MAGIC
    assert doc["version"] == FORMAT_VERSION
    assert doc["kind"] == "gbrt"


def test_bad_magic_rejected():
    with pytest.raises(DataError):
        model_from_bytes(json.dumps({"magic": "NOPE", "version": 1}).encode())


def test_corrupt_blob_rejected():
    with pytest.raises(DataError):
        model_from_bytes(b"not json at all")


def test_unknown_version_rejected():
    X, y = make_regression(40, 2, seed=3)
    model = make_model("gbrt", seed=0, overrides=SMALL["gbrt"])
    model.fit(X, y, ["f0", "f1"])
    doc = json.loads(model_to_bytes(model))
    doc["version"] = 999
    with pytest.raises(DataError):
        model_from_bytes(json.dumps(doc).encode())


def test_schema_mismatch_on_predict():
    X, y = make_regression(40, 2, seed=4)
    model = make_model("gbrt", seed=0, overrides=SMALL["gbrt"])
    model.fit(X, y, ["f0", "f1"])
    with pytest.raises(DataError):
        model.predict(X, ["f0", "other"])


def test_unknown_model_kind():
    with pytest.raises(Exception):
        make_model("mystery", seed=0)


def test_unknown_config_key():
    with pytest.raises(Exception):
        make_model("gbrt", seed=0, overrides={"no_such_knob": 3})
