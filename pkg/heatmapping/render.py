"""
Heatmap rendering.

Relevance is pooled over color channels (summed), normalized to [-1, 1] and
mapped through a symmetric diverging colormap. The positive half is the
piecewise-linear table

    position   R    G    B
    0.0       255  255  255   (neutral)
    0.5       255    0    0
    1.0       128    0    0   (positive endpoint)

and negative relevance uses the same table with red and blue exchanged, so
render(-R) is render(R) with the two endpoints swapped, bit for bit.
"""

from enum import Enum
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np
from PIL import Image
from pydantic import BaseModel, Field, PositiveFloat, model_validator

from heatmapping.errors import ShapeError

POSITIVE_TABLE = np.array(
    [
        [0.0, 255.0, 255.0, 255.0],
        [0.5, 255.0, 0.0, 0.0],
        [1.0, 128.0, 0.0, 0.0],
    ]
)


class Normalization(str, Enum):
    MAX_ABS = "max-abs"
    FIXED = "fixed"


class RenderConfig(BaseModel):
    normalization: Normalization = Normalization.MAX_ABS
    scale: Optional[PositiveFloat] = None
    channel_pooling: Literal["sum"] = "sum"
    overlay_alpha: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_scale(self):
        if self.normalization is Normalization.FIXED and self.scale is None:
            raise ValueError("fixed normalization needs a positive scale")
        return self

    @classmethod
    def fixed(
        cls, scale: float, overlay_alpha: Optional[float] = None
    ) -> "RenderConfig":
        return cls(
            normalization=Normalization.FIXED, scale=scale, overlay_alpha=overlay_alpha
        )


def pool_channels(relevance: np.ndarray) -> np.ndarray:
    """(C, H, W) relevance -> (H, W) pixel relevance by summing channels."""
    relevance = np.asarray(relevance, dtype=np.float64)
    if relevance.ndim == 3:
        return relevance.sum(axis=0)
    if relevance.ndim == 2:
        return relevance
    raise ShapeError(f"cannot render relevance of shape {relevance.shape} as an image")


def normalize(pixels: np.ndarray, cfg: RenderConfig) -> np.ndarray:
    if cfg.normalization is Normalization.FIXED:
        divisor = cfg.scale
    else:
        divisor = float(np.max(np.abs(pixels))) if pixels.size else 0.0
        if divisor == 0.0:
            return np.zeros_like(pixels)
    return np.clip(pixels / divisor, -1.0, 1.0)


def colorize(normalized: np.ndarray) -> np.ndarray:
    """Map values in [-1, 1] to 8-bit RGB through the diverging table."""
    t = np.abs(normalized)
    channels = [
        np.interp(t, POSITIVE_TABLE[:, 0], POSITIVE_TABLE[:, c]) for c in (1, 2, 3)
    ]
    rgb = np.rint(np.stack(channels, axis=-1)).astype(np.uint8)
    negative = normalized < 0
    rgb[negative] = rgb[negative][:, ::-1]
    return rgb


def render(relevance: np.ndarray, cfg: Optional[RenderConfig] = None) -> np.ndarray:
    """
    Render input-layer relevance as an (H, W, 3) uint8 image.

    An all-zero map under max-abs normalization renders all neutral.
    """
    cfg = cfg or RenderConfig()
    return colorize(normalize(pool_channels(relevance), cfg))


def to_uint8(image: np.ndarray) -> np.ndarray:
    """(H, W, 3) float image in [0, 1] -> uint8."""
    return np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def overlay(image: np.ndarray, heatmap: np.ndarray, alpha: float) -> np.ndarray:
    """Blend a rendered heatmap over the source image with weight ``alpha``."""
    base = to_uint8(image).astype(np.float64)
    blended = (1.0 - alpha) * base + alpha * heatmap.astype(np.float64)
    return np.rint(blended).astype(np.uint8)


def side_by_side(images: Sequence[np.ndarray], gap: int = 2) -> np.ndarray:
    height = max(img.shape[0] for img in images)
    panels = []
    for i, img in enumerate(images):
        padded = np.full((height, img.shape[1], 3), 255, dtype=np.uint8)
        padded[: img.shape[0]] = img
        panels.append(padded)
        if i < len(images) - 1:
            panels.append(np.full((height, gap, 3), 255, dtype=np.uint8))
    return np.concatenate(panels, axis=1)


def write_image(rgb: np.ndarray, path) -> None:
    """Save as PNG or binary PPM (P6), chosen by suffix."""
    path = Path(path)
    fmt = {".png": "PNG", ".ppm": "PPM"}.get(path.suffix.lower())
    if fmt is None:
        raise ValueError(f"unsupported image suffix: {path.suffix}")
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format=fmt)
