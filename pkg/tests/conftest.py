import numpy as np
import pytest

from heatmapping.net import (
    Conv2D,
    Dense,
    Flatten,
    MaxPool2D,
    Network,
    ReLU,
    load_model,
    predict,
)
from heatmapping.toy import toy_images, write_toy
from heatmapping.training import TrainConfig, TrainingMode, load_dataset, train


def _dense(rng, n_in, n_out, bias):
    weight = rng.standard_normal((n_out, n_in)) / np.sqrt(n_in)
    b = rng.standard_normal(n_out) * 0.1 if bias else np.zeros(n_out)
    return Dense(weight=weight, bias=b)


def _conv(rng, in_c, out_c, bias):
    kernel = rng.standard_normal((out_c, in_c, 3, 3)) / np.sqrt(in_c * 9)
    b = rng.standard_normal(out_c) * 0.1 if bias else np.zeros(out_c)
    return Conv2D(kernel=kernel, bias=b)


def random_network(rng: np.random.Generator, bias: bool = False) -> Network:
    """
    A random 2-5 layer network of one of five layouts.

    Hidden layers are wide enough that every alpha-beta column sees both
    positive and negative contributions on mixed-sign inputs.
    """
    layout = int(rng.integers(5))
    if layout == 0:
        side = int(rng.integers(4, 7))
        layers = [Flatten(), _dense(rng, 3 * side * side, 1, bias)]
        return Network(layers, (3, side, side))
    if layout == 1:
        d, h = int(rng.integers(24, 41)), int(rng.integers(48, 65))
        return Network([_dense(rng, d, h, bias), ReLU(), _dense(rng, h, 1, bias)], (d,))
    if layout == 2:
        d = int(rng.integers(24, 41))
        h1, h2 = int(rng.integers(48, 65)), int(rng.integers(48, 65))
        layers = [
            _dense(rng, d, h1, bias),
            ReLU(),
            _dense(rng, h1, h2, bias),
            ReLU(),
            _dense(rng, h2, 1, bias),
        ]
        return Network(layers, (d,))
    in_c, out_c, side = 3, int(rng.integers(3, 5)), 8
    if layout == 3:
        flat = out_c * (side - 2) ** 2
        layers = [
            _conv(rng, in_c, out_c, bias),
            ReLU(),
            Flatten(),
            _dense(rng, flat, 1, bias),
        ]
        return Network(layers, (in_c, side, side))
    flat = out_c * ((side - 2) // 2) ** 2
    layers = [
        _conv(rng, in_c, out_c, bias),
        ReLU(),
        MaxPool2D(window=(2, 2), stride=2),
        Flatten(),
        _dense(rng, flat, 1, bias),
    ]
    return Network(layers, (in_c, side, side))


def random_case(rng: np.random.Generator, bias: bool = False):
    """A random network and an input whose score is safely away from zero."""
    while True:
        net = random_network(rng, bias)
        for _ in range(10):
            x = rng.standard_normal(net.input_shape)
            if abs(predict(net, x)) > 0.1:
                return net, x


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def make_case():
    return random_case


@pytest.fixture
def small_conv_net():
    rng = np.random.default_rng(7)
    layers = [
        _conv(rng, 2, 3, bias=True),
        ReLU(),
        MaxPool2D(window=(2, 2), stride=2),
        Flatten(),
        _dense(rng, 3 * 3 * 3, 4, bias=True),
        ReLU(),
        _dense(rng, 4, 1, bias=True),
    ]
    return Network(layers, (2, 8, 8))


@pytest.fixture(scope="session")
def toy_run(tmp_path_factory):
    """The toy benchmark: base model, data, and a dense-only retrained model."""
    root = tmp_path_factory.mktemp("toy")
    artifacts = write_toy(root, seed=0)
    base = load_model(artifacts.model_path)
    ds = load_dataset(artifacts.data_dir, artifacts.labels_csv, base.input_shape)
    cfg = TrainConfig(mode=TrainingMode.DENSE_ONLY, learning_rate=0.001, momentum=0.9)
    trained, curve = train(base, ds, cfg)
    return {
        "artifacts": artifacts,
        "base": base,
        "dataset": ds,
        "trained": trained,
        "curve": curve,
    }


@pytest.fixture(scope="session")
def toy_inputs():
    """Fresh toy images (not in the training set) as float (H, W, 3) arrays."""
    return [img.astype(np.float64) / 255.0 for img in toy_images(100, seed=1234)]
