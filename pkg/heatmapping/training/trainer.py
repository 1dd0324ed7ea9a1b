import csv
import math
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from heatmapping.errors import (
    DatasetError,
    DivergenceError,
    NonFiniteError,
    NonFiniteGradientError,
)
from heatmapping.logger import get_logger
from heatmapping.net.layers import Dense, Layer
from heatmapping.net.network import Network, predict, rebuild_layers, run_layers
from heatmapping.training.data import SCORE_SPAN, LabeledDataset, split_dataset
from heatmapping.training.optim import Params, sgd_nesterov_step

logger = get_logger(__name__)


class TrainingMode(str, Enum):
    DENSE_ONLY = "dense-only"
    FULL = "full"


class TrainConfig(BaseModel):
    learning_rate: float = Field(default=0.001, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    mode: TrainingMode = TrainingMode.DENSE_ONLY
    epochs: int = Field(default=30, ge=0)
    batch_size: int = Field(default=4, gt=0)
    seed: int = Field(default=0, ge=0)
    replace_head: bool = True


class CurvePoint(BaseModel):
    epoch: int
    train_mae: float
    test_mae: float
    train_loss: float


class LearningCurve(BaseModel):
    points: List[CurvePoint] = []

    def __len__(self):
        return len(self.points)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_mae", "test_mae"])
            for point in self.points:
                writer.writerow(
                    [point.epoch, repr(point.train_mae), repr(point.test_mae)]
                )


def trainable_keys(net: Network, mode: TrainingMode) -> List[str]:
    keys = []
    for i, layer in enumerate(net.layers):
        if mode is TrainingMode.DENSE_ONLY and not isinstance(layer, Dense):
            continue
        keys.extend(f"{i}.{name}" for name in layer.params())
    return keys


def glorot_uniform(
    rng: np.random.Generator, fan_in: int, fan_out: int, shape
) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def replace_head(net: Network, seed: int, n_out: int = 1) -> Network:
    """Swap the last Dense layer for a fresh ``n_out``-unit layer.

    The new weights are Glorot-uniform and the bias is zero.
    """
    dense = net.dense_indices()
    if not dense:
        raise DatasetError("network has no dense layer to replace")
    head_index = dense[-1]
    head: Dense = net.layers[head_index]
    rng = np.random.default_rng(seed)
    weight = glorot_uniform(rng, head.in_features, n_out, (n_out, head.in_features))
    layers = list(net.layers)
    layers[head_index] = Dense(weight=weight, bias=np.zeros(n_out))
    logger.info(
        f"Replaced head layer {head_index} with dense({head.in_features}->{n_out})"
    )
    return Network(layers, net.input_shape)


def sample_gradients(
    layers: Sequence[Layer], offset: int, x: np.ndarray, y: float, keys
) -> Tuple[float, float, Params, np.ndarray]:
    """
    Squared-error loss 0.5 * (f(x) - y)^2 and its gradients for one sample.

    Returns:
        (loss, absolute error, parameter gradients restricted to ``keys``,
        gradient with respect to ``x``)
    """
    inputs, outputs = run_layers(layers, x, offset=offset)
    out = outputs[-1]
    err = float(out.reshape(-1)[0]) - y
    grad = np.zeros_like(out)
    grad.reshape(-1)[0] = err

    grads: Params = {}
    for j in reversed(range(len(layers))):
        grad, param_grads = layers[j].backward(inputs[j], grad)
        for name, value in param_grads.items():
            key = f"{offset + j}.{name}"
            if key in keys:
                grads[key] = value
    return 0.5 * err * err, abs(err), grads, grad


def _predictions(layers: Sequence[Layer], offset: int, features: Sequence[np.ndarray]):
    return np.array(
        [run_layers(layers, x, offset=offset)[1][-1].reshape(-1)[0] for x in features]
    )


def mae_from_predictions(predictions, targets) -> float:
    """Mean absolute error of rescaled predictions, reported in 1–9 units."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    return float(np.mean(np.abs(predictions - targets)) * SCORE_SPAN)


def mae(net: Network, ds: LabeledDataset) -> float:
    if len(ds) == 0:
        raise DatasetError("cannot evaluate MAE on an empty dataset")
    predictions = [predict(net, item.image) for item in ds.items]
    return mae_from_predictions(predictions, ds.targets())


def train(
    net: Network,
    ds: LabeledDataset,
    cfg: TrainConfig,
    test: Optional[LabeledDataset] = None,
) -> Tuple[Network, LearningCurve]:
    """
    Retrain ``net`` on ``ds`` with Nesterov SGD.

    Without an explicit ``test`` set the dataset is split 50/50 with
    ``cfg.seed``. In dense-only mode the layers before the first Dense layer
    are frozen, so their outputs are computed once and reused every epoch.

    Returns:
        The retrained network and one curve point per completed epoch

    Raises:
        DivergenceError: If the loss or a gradient becomes non-finite
    """
    if cfg.epochs == 0:
        return net, LearningCurve()
    if len(ds) == 0:
        raise DatasetError("cannot train on an empty dataset")

    train_ds, test_ds = (ds, test) if test is not None else split_dataset(ds, cfg.seed)
    if len(test_ds) == 0:
        raise DatasetError("test set is empty")
    if cfg.replace_head and net.output_shape != (1,):
        net = replace_head(net, cfg.seed)

    keys = trainable_keys(net, cfg.mode)
    if not keys:
        raise DatasetError(f"no trainable parameters in mode {cfg.mode.value}")
    first = min(int(key.split(".")[0]) for key in keys)
    prefix = net.layers[:first]

    def features(dataset: LabeledDataset) -> List[np.ndarray]:
        if not prefix:
            return [item.image for item in dataset.items]
        return [run_layers(prefix, item.image)[1][-1] for item in dataset.items]

    train_x, test_x = features(train_ds), features(test_ds)
    train_y, test_y = train_ds.targets(), test_ds.targets()
    logger.info(
        f"🏋️ Training {len(keys)} parameter tensors ({cfg.mode.value}) on "
        f"{len(train_x)} samples, testing on {len(test_x)}"
    )

    all_params = net.params()
    params = {key: np.array(all_params[key]) for key in keys}
    velocity = {key: np.zeros_like(value) for key, value in params.items()}
    rng = np.random.default_rng(cfg.seed)
    curve = LearningCurve()

    def suffix_layers(point: Params) -> List[Layer]:
        return rebuild_layers(net.layers, point)[first:]

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train_x))
        abs_error = 0.0
        loss_total = 0.0

        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]

            def grad_fn(point: Params) -> Params:
                nonlocal abs_error, loss_total
                layers = suffix_layers(point)
                total = {key: np.zeros_like(value) for key, value in point.items()}
                for idx in batch:
                    loss, err, grads, _ = sample_gradients(
                        layers, first, train_x[idx], train_y[idx], total
                    )
                    loss_total += loss
                    abs_error += err
                    for key, value in grads.items():
                        total[key] += value
                return {key: value / len(batch) for key, value in total.items()}

            try:
                params, velocity = sgd_nesterov_step(params, velocity, grad_fn, cfg)
            except (NonFiniteGradientError, NonFiniteError) as e:
                raise DivergenceError(epoch, str(e)) from e

        if not math.isfinite(loss_total):
            raise DivergenceError(epoch, "loss is not finite")

        test_layers = suffix_layers(params)
        test_predictions = _predictions(test_layers, first, test_x)
        test_mae = mae_from_predictions(test_predictions, test_y)
        point = CurvePoint(
            epoch=epoch,
            train_mae=abs_error / len(train_x) * SCORE_SPAN,
            test_mae=test_mae,
            train_loss=loss_total / len(train_x),
        )
        curve.points.append(point)
        logger.info(
            f"epoch {epoch}/{cfg.epochs}: train MAE {point.train_mae:.4f}, "
            f"test MAE {point.test_mae:.4f}"
        )

    return net.with_params(params), curve
