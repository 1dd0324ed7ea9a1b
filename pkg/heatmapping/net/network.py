from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from heatmapping.errors import ShapeError
from heatmapping.logger import get_logger
from heatmapping.net.layers import Dense, Layer, Params
from heatmapping.net.tensor import Shape, check_finite

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Network:
    """
    An ordered, validated stack of layers.

    The shape chain is checked at construction: every layer's input shape,
    derived from ``input_shape`` by the layers' shape algebra, must be
    accepted by that layer.
    """

    layers: Tuple[Layer, ...]
    input_shape: Shape
    shapes: Tuple[Shape, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        if not self.layers:
            raise ShapeError("network has no layers")
        if any(s < 1 for s in self.input_shape):
            raise ShapeError(f"input shape {self.input_shape} has non-positive extents")
        object.__setattr__(self, "shapes", infer_shapes(self.layers, self.input_shape))

    @property
    def output_shape(self) -> Shape:
        return self.shapes[-1]

    def layer_names(self) -> List[str]:
        return [f"{i}:{layer.kind}" for i, layer in enumerate(self.layers)]

    def params(self) -> Dict[str, np.ndarray]:
        """Flat parameter dict keyed ``"<layer index>.<name>"``."""
        flat = {}
        for i, layer in enumerate(self.layers):
            for name, value in layer.params().items():
                flat[f"{i}.{name}"] = value
        return flat

    def with_params(self, flat: Dict[str, np.ndarray]) -> "Network":
        return Network(rebuild_layers(self.layers, flat), self.input_shape)

    def has_bias(self) -> bool:
        return any(
            np.any(value != 0)
            for key, value in self.params().items()
            if key.endswith(".bias")
        )

    def dense_indices(self) -> List[int]:
        return [i for i, layer in enumerate(self.layers) if isinstance(layer, Dense)]


@dataclass(frozen=True, eq=False)
class ActivationTrace:
    """Per-layer (input, output) activations of one forward pass."""

    inputs: Tuple[np.ndarray, ...]
    outputs: Tuple[np.ndarray, ...]

    def __len__(self):
        return len(self.inputs)

    @property
    def output(self) -> np.ndarray:
        return self.outputs[-1]


def infer_shapes(layers: Sequence[Layer], input_shape: Shape) -> Tuple[Shape, ...]:
    """Output shape of every layer, raising ``ShapeError`` with the failing index."""
    shapes = []
    current = tuple(input_shape)
    for i, layer in enumerate(layers):
        try:
            current = tuple(layer.output_shape(current))
        except ShapeError as e:
            raise ShapeError(str(e), layer_index=i) from e
        shapes.append(current)
    return tuple(shapes)


def rebuild_layers(layers: Sequence[Layer], flat: Dict[str, np.ndarray]) -> List[Layer]:
    rebuilt = []
    for i, layer in enumerate(layers):
        own: Params = {
            key.split(".", 1)[1]: value
            for key, value in flat.items()
            if key.split(".", 1)[0] == str(i)
        }
        rebuilt.append(layer.with_params(own) if own else layer)
    return rebuilt


def run_layers(layers: Sequence[Layer], x: np.ndarray, offset: int = 0):
    """Forward ``x`` through ``layers``, returning the per-layer inputs and outputs."""
    inputs, outputs = [], []
    current = x
    for i, layer in enumerate(layers):
        inputs.append(current)
        current = layer.forward(current)
        check_finite(current, f"{layer.kind} output", layer_index=offset + i)
        outputs.append(current)
    return inputs, outputs


def forward(net: Network, x: np.ndarray) -> ActivationTrace:
    """
    Evaluate ``net`` on a single input, recording every layer's activations.

    Raises:
        ShapeError: If ``x`` does not have the network's input shape (layer 0)
        NonFiniteError: If any intermediate activation is NaN or Inf
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != net.input_shape:
        raise ShapeError(
            f"input shape {x.shape} does not match network input {net.input_shape}",
            layer_index=0,
        )
    check_finite(x, "input", layer_index=0)
    inputs, outputs = run_layers(net.layers, x)
    logger.debug(f"forward pass over {len(net.layers)} layers -> {outputs[-1].shape}")
    return ActivationTrace(tuple(inputs), tuple(outputs))


def predict(net: Network, x: np.ndarray, output_index: int = 0) -> float:
    return float(forward(net, x).output.reshape(-1)[output_index])
