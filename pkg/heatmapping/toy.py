"""
Synthetic brightness benchmark.

Images are dark noise with one Gaussian blob of random position, width and
intensity; the label is the image's mean brightness mapped linearly onto the
1-9 rating scale. The base model is a small conv/pool/dense stack with
positively skewed random weights, so its features already track brightness
and a retrained head can read the score off them.
"""

import csv
from pathlib import Path
from typing import List, NamedTuple

import numpy as np
from PIL import Image

from heatmapping.logger import get_logger
from heatmapping.net.layers import Conv2D, Dense, Flatten, MaxPool2D, ReLU
from heatmapping.net.network import Network
from heatmapping.net.serialization import save_model
from heatmapping.training.data import SCORE_MIN, SCORE_SPAN

logger = get_logger(__name__)

TOY_SIZE = 16
TOY_SAMPLES = 200
TOY_ATTRIBUTE = "brightness"
BASE_OUTPUTS = 4
HIDDEN_UNITS = 16


class ToyArtifacts(NamedTuple):
    model_path: Path
    data_dir: Path
    labels_csv: Path


def toy_image(rng: np.random.Generator, size: int = TOY_SIZE) -> np.ndarray:
    """One (size, size, 3) uint8 image."""
    background = rng.uniform(0.0, 0.2, size=(size, size, 3))
    cy, cx = rng.uniform(0.0, size, size=2)
    sigma = rng.uniform(1.5, 4.0)
    amplitude = rng.uniform(0.2, 0.8)
    tint = rng.uniform(0.7, 1.0, size=3)
    rows, cols = np.mgrid[0:size, 0:size] + 0.5
    blob = np.exp(-((rows - cy) ** 2 + (cols - cx) ** 2) / (2.0 * sigma**2))
    pixels = background + amplitude * blob[:, :, None] * tint
    return np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)


def toy_images(count: int, seed: int, size: int = TOY_SIZE) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [toy_image(rng, size) for _ in range(count)]


def brightness_scores(images: List[np.ndarray]) -> np.ndarray:
    """Raw 1-9 scores from the mean brightness of the stored pixels."""
    means = np.array([img.astype(np.float64).mean() / 255.0 for img in images])
    span = means.max() - means.min() if len(means) else 0.0
    if span == 0.0:
        return np.full(len(means), SCORE_MIN + SCORE_SPAN / 2)
    return SCORE_MIN + SCORE_SPAN * (means - means.min()) / span


def _skewed(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    r = 1.0 / np.sqrt(fan_in)
    # float32-representable so the saved model reloads bit-exactly
    return rng.uniform(-0.5 * r, r, size=shape).astype(np.float32).astype(np.float64)


def make_base_model(seed: int = 0, size: int = TOY_SIZE) -> Network:
    """
    conv(3->4, 3x3) -> relu -> maxpool(2x2) -> flatten -> dense(16) -> relu
    -> dense(4), all biases zero.
    """
    rng = np.random.default_rng(seed)
    pooled = (size - 2) // 2
    features = 4 * pooled * pooled
    layers = [
        Conv2D(kernel=_skewed(rng, (4, 3, 3, 3), 27), bias=np.zeros(4)),
        ReLU(),
        MaxPool2D(window=(2, 2), stride=2),
        Flatten(),
        Dense(
            weight=_skewed(rng, (HIDDEN_UNITS, features), features),
            bias=np.zeros(HIDDEN_UNITS),
        ),
        ReLU(),
        Dense(
            weight=_skewed(rng, (BASE_OUTPUTS, HIDDEN_UNITS), HIDDEN_UNITS),
            bias=np.zeros(BASE_OUTPUTS),
        ),
    ]
    return Network(layers, (3, size, size))


def write_toy(
    out_dir, samples: int = TOY_SAMPLES, seed: int = 0, size: int = TOY_SIZE
) -> ToyArtifacts:
    """
    Write the base model, the images and the labels CSV under ``out_dir``.

    Layout: ``base_model.json`` + ``.bin``, ``images/toy_NNN.png``,
    ``labels.csv`` with columns filename, attribute, raw_score.
    """
    out_dir = Path(out_dir)
    data_dir = out_dir / "images"
    data_dir.mkdir(parents=True, exist_ok=True)

    images = toy_images(samples, seed, size)
    scores = brightness_scores(images)
    labels_csv = out_dir / "labels.csv"
    with labels_csv.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["filename", "attribute", "raw_score"])
        for i, (img, score) in enumerate(zip(images, scores)):
            name = f"toy_{i:03d}.png"
            Image.fromarray(img).save(data_dir / name, format="PNG")
            writer.writerow([name, TOY_ATTRIBUTE, repr(float(score))])

    model_path = out_dir / "base_model.json"
    save_model(make_base_model(seed, size), model_path)
    logger.info(
        f"🧪 Wrote toy benchmark: {samples} images, base model {model_path.name}"
    )
    return ToyArtifacts(model_path, data_dir, labels_csv)
