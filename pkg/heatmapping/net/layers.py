from dataclasses import dataclass, replace
from typing import ClassVar, Dict, Tuple

import numpy as np

from heatmapping.errors import ShapeError
from heatmapping.net.im2col import col2im, conv_output_extent, im2col
from heatmapping.net.tensor import Shape, check_finite, frozen

Params = Dict[str, np.ndarray]


class Layer:
    """
    One step of a feedforward network.

    Layers are immutable: parameters are stored as read-only float64 arrays
    and ``with_params`` builds a new layer instead of updating in place.
    """

    kind: ClassVar[str] = "layer"

    def output_shape(self, input_shape: Shape) -> Shape:
        raise NotImplementedError

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(
        self, x: np.ndarray, grad_out: np.ndarray
    ) -> Tuple[np.ndarray, Params]:
        """
        Backpropagate ``grad_out`` through the layer evaluated at ``x``.

        Returns:
            The gradient with respect to ``x`` and a dict of parameter gradients
            keyed like ``params()``
        """
        raise NotImplementedError

    def params(self) -> Params:
        return {}

    def with_params(self, params: Params) -> "Layer":
        return self

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True, eq=False)
class Dense(Layer):
    weight: np.ndarray
    bias: np.ndarray

    kind: ClassVar[str] = "dense"

    def __post_init__(self):
        object.__setattr__(self, "weight", frozen(self.weight))
        object.__setattr__(self, "bias", frozen(self.bias))
        check_finite(self.weight, "dense weight")
        check_finite(self.bias, "dense bias")
        if self.weight.ndim != 2:
            raise ShapeError(f"dense weight must be 2-D, got {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"dense bias shape {self.bias.shape} does not match "
                f"weight {self.weight.shape}"
            )

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]

    def output_shape(self, input_shape: Shape) -> Shape:
        if tuple(input_shape) != (self.in_features,):
            raise ShapeError(
                f"dense expects input ({self.in_features},), got {tuple(input_shape)}"
            )
        return (self.out_features,)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.weight @ x + self.bias

    def backward(self, x, grad_out):
        grad_x = self.weight.T @ grad_out
        return grad_x, {"weight": np.outer(grad_out, x), "bias": grad_out.copy()}

    def params(self) -> Params:
        return {"weight": self.weight, "bias": self.bias}

    def with_params(self, params: Params) -> "Dense":
        return replace(self, **params)

    def describe(self) -> str:
        return f"dense({self.in_features}->{self.out_features})"


@dataclass(frozen=True, eq=False)
class Conv2D(Layer):
    kernel: np.ndarray
    bias: np.ndarray
    stride: int = 1
    padding: int = 0

    kind: ClassVar[str] = "conv2d"

    def __post_init__(self):
        object.__setattr__(self, "kernel", frozen(self.kernel))
        object.__setattr__(self, "bias", frozen(self.bias))
        check_finite(self.kernel, "conv2d kernel")
        check_finite(self.bias, "conv2d bias")
        if self.kernel.ndim != 4:
            raise ShapeError(
                f"conv2d kernel must be outC x inC x kH x kW, got {self.kernel.shape}"
            )
        if self.bias.shape != (self.kernel.shape[0],):
            raise ShapeError(
                f"conv2d bias shape {self.bias.shape} does not match "
                f"kernel {self.kernel.shape}"
            )
        if self.stride < 1:
            raise ShapeError(f"conv2d stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ShapeError(f"conv2d padding must be >= 0, got {self.padding}")

    @property
    def window(self) -> Tuple[int, int]:
        return self.kernel.shape[2], self.kernel.shape[3]

    def output_shape(self, input_shape: Shape) -> Shape:
        out_c, in_c, kh, kw = self.kernel.shape
        if len(input_shape) != 3 or input_shape[0] != in_c:
            raise ShapeError(
                f"conv2d expects input ({in_c}, H, W), got {tuple(input_shape)}"
            )
        out_h = conv_output_extent(input_shape[1], kh, self.stride, self.padding)
        out_w = conv_output_extent(input_shape[2], kw, self.stride, self.padding)
        if out_h < 1 or out_w < 1:
            raise ShapeError(
                f"conv2d kernel {kh}x{kw} does not fit input {tuple(input_shape)}"
            )
        return (out_c, out_h, out_w)

    def unroll(self, x: np.ndarray) -> np.ndarray:
        """Patch matrix of ``x``: one row per output position."""
        kh, kw = self.window
        return im2col(x, kh, kw, self.stride, self.padding)

    def kernel_matrix(self) -> np.ndarray:
        return self.kernel.reshape(self.kernel.shape[0], -1)

    def forward(self, x: np.ndarray) -> np.ndarray:
        out_c, out_h, out_w = self.output_shape(x.shape)
        cols = self.unroll(x)
        out = cols @ self.kernel_matrix().T + self.bias
        return np.ascontiguousarray(out.T.reshape(out_c, out_h, out_w))

    def backward(self, x, grad_out):
        out_c = self.kernel.shape[0]
        cols = self.unroll(x)
        grad_mat = grad_out.reshape(out_c, -1).T
        grad_kernel = (grad_mat.T @ cols).reshape(self.kernel.shape)
        grad_cols = grad_mat @ self.kernel_matrix()
        kh, kw = self.window
        grad_x = col2im(grad_cols, x.shape, kh, kw, self.stride, self.padding)
        return grad_x, {"kernel": grad_kernel, "bias": grad_mat.sum(axis=0)}

    def params(self) -> Params:
        return {"kernel": self.kernel, "bias": self.bias}

    def with_params(self, params: Params) -> "Conv2D":
        return replace(self, **params)

    def describe(self) -> str:
        out_c, in_c, kh, kw = self.kernel.shape
        return f"conv2d({in_c}->{out_c}, {kh}x{kw}, s={self.stride}, p={self.padding})"


@dataclass(frozen=True, eq=False)
class MaxPool2D(Layer):
    window: Tuple[int, int]
    stride: int

    kind: ClassVar[str] = "maxpool2d"

    def __post_init__(self):
        object.__setattr__(self, "window", tuple(int(k) for k in self.window))
        if len(self.window) != 2 or min(self.window) < 1:
            raise ShapeError(
                f"maxpool2d window must be two positive ints, got {self.window}"
            )
        if self.stride < 1:
            raise ShapeError(f"maxpool2d stride must be >= 1, got {self.stride}")

    def output_shape(self, input_shape: Shape) -> Shape:
        kh, kw = self.window
        if len(input_shape) != 3:
            raise ShapeError(f"maxpool2d expects (C, H, W), got {tuple(input_shape)}")
        out_h = conv_output_extent(input_shape[1], kh, self.stride, 0)
        out_w = conv_output_extent(input_shape[2], kw, self.stride, 0)
        if out_h < 1 or out_w < 1:
            raise ShapeError(
                f"maxpool2d window {kh}x{kw} does not fit input {tuple(input_shape)}"
            )
        return (input_shape[0], out_h, out_w)

    def windows(self, x: np.ndarray) -> np.ndarray:
        """Pooling windows of ``x`` as a (positions, channels, kh*kw) array."""
        kh, kw = self.window
        cols = im2col(x, kh, kw, self.stride, 0)
        return cols.reshape(cols.shape[0], x.shape[0], kh * kw)

    def winners(self, x: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lowest flat index on ties
        return self.windows(x).argmax(axis=2)

    def scatter(self, x: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Route one value per output unit back to its window's winner."""
        kh, kw = self.window
        windows = self.windows(x)
        positions, channels, size = windows.shape
        winners = windows.argmax(axis=2)
        cols = np.zeros_like(windows)
        per_position = values.reshape(channels, positions).T
        np.put_along_axis(cols, winners[:, :, None], per_position[:, :, None], axis=2)
        return col2im(cols.reshape(positions, -1), x.shape, kh, kw, self.stride, 0)

    def forward(self, x: np.ndarray) -> np.ndarray:
        channels, out_h, out_w = self.output_shape(x.shape)
        pooled = self.windows(x).max(axis=2)
        return np.ascontiguousarray(pooled.T.reshape(channels, out_h, out_w))

    def backward(self, x, grad_out):
        return self.scatter(x, grad_out), {}

    def describe(self) -> str:
        kh, kw = self.window
        return f"maxpool2d({kh}x{kw}, s={self.stride})"


@dataclass(frozen=True, eq=False)
class ReLU(Layer):
    kind: ClassVar[str] = "relu"

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(x, 0.0)

    def backward(self, x, grad_out):
        return grad_out * (x > 0), {}


@dataclass(frozen=True, eq=False)
class Flatten(Layer):
    kind: ClassVar[str] = "flatten"

    def output_shape(self, input_shape: Shape) -> Shape:
        return (int(np.prod(input_shape)),)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(-1)

    def backward(self, x, grad_out):
        return grad_out.reshape(x.shape), {}


LAYER_KINDS = {cls.kind: cls for cls in (Dense, Conv2D, MaxPool2D, ReLU, Flatten)}
