"""Patch unrolling for single-sample channel-first tensors.

``im2col`` turns a (C, H, W) tensor into a (P, C*kh*kw) matrix with one row
per output position (row-major over the output grid) and columns ordered
(channel, kernel row, kernel column). ``col2im`` is its adjoint: it
scatter-adds rows back onto the input grid, so overlapping windows
accumulate.
"""

from typing import Tuple

import numpy as np


def conv_output_extent(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def im2col(
    x: np.ndarray, kh: int, kw: int, stride: int = 1, pad: int = 0
) -> np.ndarray:
    C, H, W = x.shape
    out_h = conv_output_extent(H, kh, stride, pad)
    out_w = conv_output_extent(W, kw, stride, pad)

    img = np.pad(x, [(0, 0), (pad, pad), (pad, pad)], mode="constant")
    col = np.empty((C, kh, kw, out_h, out_w), dtype=x.dtype)

    for y in range(kh):
        y_max = y + stride * out_h
        for dx in range(kw):
            x_max = dx + stride * out_w
            col[:, y, dx, :, :] = img[:, y:y_max:stride, dx:x_max:stride]

    return col.transpose(3, 4, 0, 1, 2).reshape(out_h * out_w, C * kh * kw)


def col2im(
    col: np.ndarray,
    input_shape: Tuple[int, int, int],
    kh: int,
    kw: int,
    stride: int = 1,
    pad: int = 0,
) -> np.ndarray:
    C, H, W = input_shape
    out_h = conv_output_extent(H, kh, stride, pad)
    out_w = conv_output_extent(W, kw, stride, pad)

    col = col.reshape(out_h, out_w, C, kh, kw).transpose(2, 3, 4, 0, 1)
    img = np.zeros((C, H + 2 * pad + stride - 1, W + 2 * pad + stride - 1))

    for y in range(kh):
        y_max = y + stride * out_h
        for dx in range(kw):
            x_max = dx + stride * out_w
            img[:, y:y_max:stride, dx:x_max:stride] += col[:, y, dx, :, :]

    return np.ascontiguousarray(img[:, pad : H + pad, pad : W + pad])
