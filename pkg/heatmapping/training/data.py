import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from heatmapping.errors import DatasetError, ScoreRangeError
from heatmapping.logger import get_logger

logger = get_logger(__name__)

SCORE_MIN = 1.0
SCORE_MAX = 9.0
SCORE_SPAN = SCORE_MAX - SCORE_MIN


def rescale_score(score: float) -> float:
    """Map a raw 1–9 rating onto [0, 1]."""
    if not (SCORE_MIN <= score <= SCORE_MAX):
        raise ScoreRangeError(f"score {score} outside [{SCORE_MIN:g}, {SCORE_MAX:g}]")
    return (score - SCORE_MIN) / SCORE_SPAN


def unscale_score(value: float) -> float:
    """Inverse of ``rescale_score``, for reporting in 1–9 units."""
    return value * SCORE_SPAN + SCORE_MIN


@dataclass(frozen=True, eq=False)
class LabeledItem:
    name: str
    image: np.ndarray  # channel-first (C, H, W), values in [0, 1]
    raw_score: float

    def __post_init__(self):
        # validates the range
        rescale_score(self.raw_score)

    @property
    def target(self) -> float:
        return rescale_score(self.raw_score)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    items: Tuple[LabeledItem, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self):
        return len(self.items)

    def targets(self) -> np.ndarray:
        return np.array([item.target for item in self.items])

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        return LabeledDataset(tuple(self.items[i] for i in indices))


def split_dataset(
    ds: LabeledDataset, seed: int
) -> Tuple[LabeledDataset, LabeledDataset]:
    """
    Seeded uniform shuffle into halves of ceil(n/2) and floor(n/2) items.

    Raises:
        DatasetError: If the dataset has fewer than two items
    """
    n = len(ds)
    if n < 2:
        raise DatasetError(f"need at least 2 items to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    cut = math.ceil(n / 2)
    return ds.subset(order[:cut]), ds.subset(order[cut:])


def image_to_input(image: np.ndarray) -> np.ndarray:
    """(H, W, 3) image -> (3, H, W) network input."""
    return np.ascontiguousarray(np.transpose(image, (2, 0, 1)), dtype=np.float64)


def load_image(path, size: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """
    Read an 8-bit image as an (H, W, 3) float64 array in [0, 1].

    Args:
        path: Image file readable by Pillow
        size: Optional (height, width) to resize to (bilinear)
    """
    with Image.open(path) as img:
        img = img.convert("RGB")
        if size is not None and (img.height, img.width) != tuple(size):
            img = img.resize((size[1], size[0]), Image.Resampling.BILINEAR)
        pixels = np.asarray(img, dtype=np.uint8)
    return pixels.astype(np.float64) / 255.0


def load_dataset(
    data_dir,
    labels_csv,
    input_shape: Tuple[int, int, int],
    attribute: Optional[str] = None,
) -> LabeledDataset:
    """
    Ingest a directory of RGB images and a ``filename,attribute,raw_score`` CSV.

    Images are resized to the network's input extent and stored channel-first.

    Raises:
        DatasetError: Missing files, malformed rows, or no matching rows
        ScoreRangeError: A score outside 1–9
    """
    data_dir = Path(data_dir)
    labels_csv = Path(labels_csv)
    if not labels_csv.is_file():
        raise DatasetError(f"labels CSV not found: {labels_csv}")
    if len(input_shape) != 3 or input_shape[0] != 3:
        raise DatasetError(f"model input {tuple(input_shape)} is not a 3-channel image")

    items = []
    with labels_csv.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"filename", "attribute", "raw_score"} - set(reader.fieldnames or [])
        if missing:
            raise DatasetError(f"labels CSV lacks columns: {sorted(missing)}")
        for line, row in enumerate(reader, start=2):
            if attribute is not None and row["attribute"] != attribute:
                continue
            try:
                score = float(row["raw_score"])
            except ValueError as e:
                raise DatasetError(
                    f"{labels_csv}:{line}: bad score {row['raw_score']!r}"
                ) from e
            image_path = data_dir / row["filename"]
            if not image_path.is_file():
                raise DatasetError(
                    f"{labels_csv}:{line}: image not found: {image_path}"
                )
            image = load_image(image_path, size=input_shape[1:])
            items.append(LabeledItem(row["filename"], image_to_input(image), score))

    if not items:
        raise DatasetError(
            f"no rows in {labels_csv}"
            + (f" for attribute {attribute!r}" if attribute is not None else "")
        )
    logger.info(f"Loaded {len(items)} labeled images from {data_dir}")
    return LabeledDataset(tuple(items))
