"""
Model files: a JSON manifest plus a sidecar blob of little-endian float32.

The blob holds, in layer order, each parameterized layer's weights followed
by its bias, every array flattened row-major. The manifest declares the blob
length so truncation is detected before any weights are interpreted.
"""

import json
from pathlib import Path
from typing import Annotated, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, PositiveInt, ValidationError

from heatmapping.errors import BlobLengthError, ModelFormatError
from heatmapping.logger import get_logger
from heatmapping.net.layers import Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU
from heatmapping.net.network import Network

logger = get_logger(__name__)

FORMAT_VERSION = 1
BLOB_DTYPE = "<f4"


class DenseEntry(BaseModel):
    kind: Literal["dense"]
    weight_shape: Tuple[PositiveInt, PositiveInt]

    def param_count(self) -> int:
        out_features, in_features = self.weight_shape
        return out_features * in_features + out_features


class Conv2DEntry(BaseModel):
    kind: Literal["conv2d"]
    kernel_shape: Tuple[PositiveInt, PositiveInt, PositiveInt, PositiveInt]
    stride: int = Field(default=1, ge=1)
    padding: int = Field(default=0, ge=0)

    def param_count(self) -> int:
        return int(np.prod(self.kernel_shape)) + self.kernel_shape[0]


class MaxPool2DEntry(BaseModel):
    kind: Literal["maxpool2d"]
    window: Tuple[PositiveInt, PositiveInt]
    stride: int = Field(ge=1)

    def param_count(self) -> int:
        return 0


class ReLUEntry(BaseModel):
    kind: Literal["relu"]

    def param_count(self) -> int:
        return 0


class FlattenEntry(BaseModel):
    kind: Literal["flatten"]

    def param_count(self) -> int:
        return 0


LayerEntry = Annotated[
    Union[DenseEntry, Conv2DEntry, MaxPool2DEntry, ReLUEntry, FlattenEntry],
    Field(discriminator="kind"),
]


class ModelManifest(BaseModel):
    format_version: Literal[1] = FORMAT_VERSION
    input_shape: List[PositiveInt]
    layers: List[LayerEntry]
    blob: str
    blob_floats: int = Field(ge=0)
    blob_bytes: int = Field(ge=0)
    dtype: Literal["<f4"] = BLOB_DTYPE


def blob_path_for(path: Path) -> Path:
    return Path(path).with_suffix(".bin")


def _entry_for(layer: Layer) -> LayerEntry:
    if isinstance(layer, Dense):
        return DenseEntry(kind="dense", weight_shape=layer.weight.shape)
    if isinstance(layer, Conv2D):
        return Conv2DEntry(
            kind="conv2d",
            kernel_shape=layer.kernel.shape,
            stride=layer.stride,
            padding=layer.padding,
        )
    if isinstance(layer, MaxPool2D):
        return MaxPool2DEntry(
            kind="maxpool2d", window=layer.window, stride=layer.stride
        )
    if isinstance(layer, ReLU):
        return ReLUEntry(kind="relu")
    if isinstance(layer, Flatten):
        return FlattenEntry(kind="flatten")
    raise ModelFormatError(f"unsupported layer kind: {layer.kind}")


def save_model(net: Network, path) -> None:
    """
    Write ``net`` as ``path`` (manifest) plus ``path`` with a ``.bin`` suffix.

    Weights are stored as float32; values that are not float32-representable
    are rounded.
    """
    path = Path(path)
    chunks = [
        value.reshape(-1) for layer in net.layers for value in layer.params().values()
    ]
    weights = np.concatenate(chunks) if chunks else np.zeros(0)
    blob = weights.astype(BLOB_DTYPE)
    if not np.array_equal(blob.astype(np.float64), weights):
        logger.debug("weights rounded to float32 for storage")

    blob_path = blob_path_for(path)
    manifest = ModelManifest(
        input_shape=list(net.input_shape),
        layers=[_entry_for(layer) for layer in net.layers],
        blob=blob_path.name,
        blob_floats=int(blob.size),
        blob_bytes=int(blob.nbytes),
    )
    blob_path.write_bytes(blob.tobytes())
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.debug(f"saved model with {blob.size} parameters to {path}")


def _build_layer(entry: LayerEntry, values: np.ndarray) -> Layer:
    if isinstance(entry, DenseEntry):
        n_weight = entry.weight_shape[0] * entry.weight_shape[1]
        return Dense(
            weight=values[:n_weight].reshape(entry.weight_shape),
            bias=values[n_weight:],
        )
    if isinstance(entry, Conv2DEntry):
        n_kernel = int(np.prod(entry.kernel_shape))
        return Conv2D(
            kernel=values[:n_kernel].reshape(entry.kernel_shape),
            bias=values[n_kernel:],
            stride=entry.stride,
            padding=entry.padding,
        )
    if isinstance(entry, MaxPool2DEntry):
        return MaxPool2D(window=entry.window, stride=entry.stride)
    if isinstance(entry, ReLUEntry):
        return ReLU()
    return Flatten()


def load_model(path) -> Network:
    """
    Read a model written by ``save_model``.

    Raises:
        ModelFormatError: Malformed manifest or parameter count disagreement
        BlobLengthError: Blob size differs from the declared length
        ShapeError: The layer shapes do not chain
    """
    path = Path(path)
    try:
        manifest = ModelManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except (ValidationError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"malformed model manifest {path}: {e}") from e

    if manifest.blob_bytes != manifest.blob_floats * 4:
        raise ModelFormatError(
            f"manifest declares {manifest.blob_floats} floats "
            f"but {manifest.blob_bytes} bytes"
        )

    raw = (path.parent / manifest.blob).read_bytes()
    if len(raw) != manifest.blob_bytes:
        raise BlobLengthError(expected=manifest.blob_bytes, actual=len(raw))

    required = sum(entry.param_count() for entry in manifest.layers)
    if required != manifest.blob_floats:
        raise ModelFormatError(
            f"shape-consistency error: layers require {required} floats, "
            f"blob carries {manifest.blob_floats}"
        )

    values = np.frombuffer(raw, dtype=BLOB_DTYPE).astype(np.float64)
    layers = []
    offset = 0
    for entry in manifest.layers:
        count = entry.param_count()
        layers.append(_build_layer(entry, values[offset : offset + count]))
        offset += count

    net = Network(layers, tuple(manifest.input_shape))
    logger.debug(f"loaded model {path} with {len(layers)} layers")
    return net
