import json

import numpy as np
import pytest

from heatmapping.errors import BlobLengthError, ModelFormatError, ShapeError
from heatmapping.net import (
    Conv2D,
    Dense,
    Flatten,
    MaxPool2D,
    Network,
    ReLU,
    load_model,
    save_model,
)
from heatmapping.net.serialization import blob_path_for


def f32(rng, shape):
    return rng.standard_normal(shape).astype(np.float32).astype(np.float64)


@pytest.fixture
def model_path(tmp_path):
    return tmp_path / "model.json"


def representable_net(rng):
    layers = [
        Conv2D(kernel=f32(rng, (3, 2, 3, 3)), bias=f32(rng, 3), stride=1, padding=1),
        ReLU(),
        MaxPool2D(window=(2, 2), stride=2),
        Flatten(),
        Dense(weight=f32(rng, (5, 48)), bias=f32(rng, 5)),
        ReLU(),
        Dense(weight=f32(rng, (1, 5)), bias=np.zeros(1)),
    ]
    return Network(layers, (2, 8, 8))


def test_roundtrip_is_exact(rng, model_path):
    net = representable_net(rng)
    save_model(net, model_path)
    loaded = load_model(model_path)

    assert loaded.input_shape == net.input_shape
    assert [layer.describe() for layer in loaded.layers] == [
        layer.describe() for layer in net.layers
    ]
    for key, value in net.params().items():
        assert loaded.params()[key].tobytes() == value.tobytes()

    blob = blob_path_for(model_path).read_bytes()
    save_model(loaded, model_path)
    assert blob_path_for(model_path).read_bytes() == blob


def test_manifest_declares_blob_length(rng, model_path):
    net = representable_net(rng)
    save_model(net, model_path)
    manifest = json.loads(model_path.read_text())
    n_params = sum(v.size for v in net.params().values())
    assert manifest["blob"] == "model.bin"
    assert manifest["blob_floats"] == n_params
    assert manifest["blob_bytes"] == 4 * n_params
    assert [entry["kind"] for entry in manifest["layers"]] == [
        "conv2d",
        "relu",
        "maxpool2d",
        "flatten",
        "dense",
        "relu",
        "dense",
    ]


def test_truncated_blob_reports_lengths(rng, model_path):
    save_model(representable_net(rng), model_path)
    blob = blob_path_for(model_path)
    raw = blob.read_bytes()
    blob.write_bytes(raw[:-4])

    with pytest.raises(BlobLengthError) as excinfo:
        load_model(model_path)
    assert excinfo.value.expected == len(raw)
    assert excinfo.value.actual == len(raw) - 4
    assert f"expected {len(raw)} bytes, got {len(raw) - 4}" in str(excinfo.value)


def test_parameter_count_disagreement(model_path):
    manifest = {
        "input_shape": [2],
        "layers": [{"kind": "dense", "weight_shape": [3, 2]}],
        "blob": "model.bin",
        "blob_floats": 5,
        "blob_bytes": 20,
    }
    model_path.write_text(json.dumps(manifest))
    blob_path_for(model_path).write_bytes(np.zeros(5, dtype="<f4").tobytes())

    with pytest.raises(ModelFormatError, match="shape-consistency error"):
        load_model(model_path)


def test_broken_shape_chain_on_load(model_path):
    manifest = {
        "input_shape": [2],
        "layers": [
            {"kind": "dense", "weight_shape": [3, 2]},
            {"kind": "dense", "weight_shape": [1, 4]},
        ],
        "blob": "model.bin",
        "blob_floats": 14,
        "blob_bytes": 56,
    }
    model_path.write_text(json.dumps(manifest))
    blob_path_for(model_path).write_bytes(np.zeros(14, dtype="<f4").tobytes())

    with pytest.raises(ShapeError) as excinfo:
        load_model(model_path)
    assert excinfo.value.layer_index == 1


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        json.dumps({"input_shape": [2], "layers": []}),
        json.dumps(
            {
                "input_shape": [2],
                "layers": [{"kind": "softmax"}],
                "blob": "model.bin",
                "blob_floats": 0,
                "blob_bytes": 0,
            }
        ),
    ],
)
def test_malformed_manifest(model_path, text):
    model_path.write_text(text)
    with pytest.raises(ModelFormatError, match="malformed model manifest"):
        load_model(model_path)


def test_weights_round_to_float32(model_path):
    net = Network([Dense(weight=[[0.1]], bias=[0.0])], (1,))
    save_model(net, model_path)
    loaded = load_model(model_path)
    assert loaded.layers[0].weight[0, 0] == float(np.float32(0.1))
