"""
Occlusion analysis.

Regions of an image are replaced by a fill color, the image is re-scored, and
the score change is compared with the share of positive relevance the
baseline heatmap placed inside the region. Images here are (H, W, 3) in
[0, 1]; they are converted to channel-first network inputs internally.

Region coordinates are in pixels with pixel (row i, col j) centered at
(j + 0.5, i + 0.5):

    rect     coords = [x, y, width, height]
    ellipse  coords = [cx, cy, rx, ry]
    mask     pixels = [[row, col], ...]
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import (
    Annotated,
    List,
    Literal,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, field_validator, model_validator

from heatmapping.errors import OcclusionError, ShapeError
from heatmapping.logger import get_logger
from heatmapping.lrp.engine import explain
from heatmapping.lrp.rules import LrpConfig
from heatmapping.net.network import Network, predict
from heatmapping.training.data import image_to_input

logger = get_logger(__name__)


class RectRegion(BaseModel):
    shape: Literal["rect"] = "rect"
    coords: Tuple[float, float, float, float]

    @field_validator("coords")
    @classmethod
    def _positive_extent(cls, v):
        if v[2] <= 0 or v[3] <= 0:
            raise ValueError("rectangle width and height must be positive")
        return v

    def out_of_bounds(self, height: int, width: int) -> Optional[str]:
        x, y, w, h = self.coords
        if x < 0 or y < 0 or x + w > width or y + h > height:
            return f"rectangle {list(self.coords)} exceeds {width}x{height} image"
        return None

    def mask(self, height: int, width: int) -> np.ndarray:
        x, y, w, h = self.coords
        cols = np.arange(width) + 0.5
        rows = np.arange(height) + 0.5
        inside_x = (cols >= x) & (cols < x + w)
        inside_y = (rows >= y) & (rows < y + h)
        return inside_y[:, None] & inside_x[None, :]


class EllipseRegion(BaseModel):
    shape: Literal["ellipse"] = "ellipse"
    coords: Tuple[float, float, float, float]

    @field_validator("coords")
    @classmethod
    def _positive_axes(cls, v):
        if v[2] <= 0 or v[3] <= 0:
            raise ValueError("ellipse radii must be positive")
        return v

    def out_of_bounds(self, height: int, width: int) -> Optional[str]:
        cx, cy, rx, ry = self.coords
        if cx - rx < 0 or cy - ry < 0 or cx + rx > width or cy + ry > height:
            return f"ellipse {list(self.coords)} exceeds {width}x{height} image"
        return None

    def mask(self, height: int, width: int) -> np.ndarray:
        cx, cy, rx, ry = self.coords
        dx = ((np.arange(width) + 0.5) - cx) / rx
        dy = ((np.arange(height) + 0.5) - cy) / ry
        return dy[:, None] ** 2 + dx[None, :] ** 2 <= 1.0


class MaskRegion(BaseModel):
    shape: Literal["mask"] = "mask"
    pixels: List[Tuple[int, int]]

    def out_of_bounds(self, height: int, width: int) -> Optional[str]:
        for row, col in self.pixels:
            if not (0 <= row < height and 0 <= col < width):
                return f"pixel ({row}, {col}) outside {width}x{height} image"
        return None

    def mask(self, height: int, width: int) -> np.ndarray:
        out = np.zeros((height, width), dtype=bool)
        if self.pixels:
            rows, cols = np.array(self.pixels).T
            out[rows, cols] = True
        return out


Region = Annotated[
    Union[RectRegion, EllipseRegion, MaskRegion], Field(discriminator="shape")
]
Fill = Union[Literal["mean"], Tuple[float, float, float]]


class OcclusionSpec(BaseModel):
    """
    One occlusion: a union of regions sharing one fill.

    A JSON entry may also give a single region inline as
    ``{"shape": ..., "coords": ..., "fill": ...}``.
    """

    name: Optional[str] = None
    regions: List[Region] = []
    fill: Fill = "mean"

    @model_validator(mode="before")
    @classmethod
    def _inline_region(cls, data):
        if isinstance(data, dict) and "shape" in data and "regions" not in data:
            data = dict(data)
            keys = [key for key in ("shape", "coords", "pixels") if key in data]
            region = {key: data.pop(key) for key in keys}
            data["regions"] = [region]
        return data

    @field_validator("fill")
    @classmethod
    def _fill_in_range(cls, v):
        if v != "mean" and not all(0.0 <= c <= 1.0 for c in v):
            raise ValueError(f"fill {list(v)} outside [0, 1]")
        return v

    def label(self, index: int) -> str:
        return self.name or f"spec-{index}"


class OcclusionRow(NamedTuple):
    name: str
    baseline: float
    occluded: float
    delta: float
    relevance_fraction: float


@dataclass(frozen=True, eq=False)
class OcclusionReport:
    baseline: float
    rows: Tuple[OcclusionRow, ...]
    baseline_heatmap: np.ndarray
    # input relevance and pixels of each occluded image, aligned with rows
    heatmaps: Tuple[np.ndarray, ...] = ()
    images: Tuple[np.ndarray, ...] = ()

    def to_csv(self, path) -> None:
        rows = self.rows or (
            OcclusionRow("baseline", self.baseline, self.baseline, 0.0, 0.0),
        )
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(OcclusionRow._fields)
            for row in rows:
                writer.writerow([row.name] + [repr(float(v)) for v in row[1:]])


def load_specs(path) -> List[OcclusionSpec]:
    """Read a JSON list of occlusion specs."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise OcclusionError(f"{path}: not valid JSON ({e})") from e
    if isinstance(data, dict) and "specs" in data:
        data = data["specs"]
    return TypeAdapter(List[OcclusionSpec]).validate_python(data)


def _check_image(img: np.ndarray):
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError(f"expected an (H, W, 3) image, got {img.shape}")


def region_mask(spec: OcclusionSpec, height: int, width: int) -> np.ndarray:
    """Union of the spec's regions as an (H, W) boolean mask."""
    mask = np.zeros((height, width), dtype=bool)
    for j, region in enumerate(spec.regions):
        problem = region.out_of_bounds(height, width)
        if problem:
            raise OcclusionError(problem, region_index=j)
        mask |= region.mask(height, width)
    return mask


def apply_occlusion(img: np.ndarray, spec: OcclusionSpec) -> np.ndarray:
    """
    Replace the pixels inside ``spec``'s regions by its fill.

    Pixels outside the regions are copied unchanged. ``"mean"`` fills with
    the per-channel mean of the whole un-occluded image.

    Raises:
        OcclusionError: If a region leaves the image, naming its index
    """
    img = np.asarray(img, dtype=np.float64)
    _check_image(img)
    mask = region_mask(spec, img.shape[0], img.shape[1])
    fill = img.mean(axis=(0, 1)) if spec.fill == "mean" else np.array(spec.fill)
    out = img.copy()
    out[mask] = fill
    return out


def positive_fraction(heatmap: np.ndarray, mask: np.ndarray) -> float:
    """Share of the positive pixel relevance that falls inside ``mask``."""
    pixels = heatmap.sum(axis=0) if heatmap.ndim == 3 else heatmap
    positive = np.clip(pixels, 0.0, None)
    total = float(positive.sum())
    if total == 0.0:
        return 0.0
    return float(min(1.0, positive[mask].sum() / total))


def occlusion_sweep(
    net: Network,
    img: np.ndarray,
    specs: Sequence[OcclusionSpec],
    cfg: Optional[LrpConfig] = None,
) -> OcclusionReport:
    """
    Score ``img`` under each occlusion and relate each score change to the
    baseline heatmap.

    Every spec is bounds-checked before any forward pass; a bad region is
    reported with its spec's position in ``specs``.
    """
    cfg = cfg or LrpConfig()
    img = np.asarray(img, dtype=np.float64)
    _check_image(img)
    height, width = img.shape[:2]

    masks = []
    for k, spec in enumerate(specs):
        for region in spec.regions:
            problem = region.out_of_bounds(height, width)
            if problem:
                raise OcclusionError(f"{spec.label(k)}: {problem}", region_index=k)
        masks.append(region_mask(spec, height, width))

    baseline_rel = explain(net, image_to_input(img), cfg)
    baseline = baseline_rel.score

    rows, heatmaps, images = [], [], []
    for k, (spec, mask) in enumerate(zip(specs, masks)):
        occluded = apply_occlusion(img, spec)
        rel = explain(net, image_to_input(occluded), cfg)
        rows.append(
            OcclusionRow(
                name=spec.label(k),
                baseline=baseline,
                occluded=rel.score,
                delta=rel.score - baseline,
                relevance_fraction=positive_fraction(baseline_rel.heatmap, mask),
            )
        )
        heatmaps.append(rel.heatmap)
        images.append(occluded)
        logger.debug(f"{spec.label(k)}: score {baseline:.6g} -> {rel.score:.6g}")

    return OcclusionReport(
        baseline=baseline,
        rows=tuple(rows),
        baseline_heatmap=baseline_rel.heatmap,
        heatmaps=tuple(heatmaps),
        images=tuple(images),
    )


def top_relevance_region(heatmap: np.ndarray, fraction: float = 0.25) -> MaskRegion:
    """
    The ``fraction`` of pixels with the highest channel-summed relevance.

    Ties are broken toward the lowest row-major pixel index.
    """
    pixels = heatmap.sum(axis=0) if heatmap.ndim == 3 else heatmap
    width = pixels.shape[1]
    count = max(1, int(round(fraction * pixels.size)))
    order = np.argsort(-pixels.reshape(-1), kind="stable")[:count]
    return MaskRegion(pixels=[divmod(int(p), width) for p in order])


def random_region(
    height: int, width: int, count: int, rng: np.random.Generator
) -> MaskRegion:
    chosen = rng.choice(height * width, size=count, replace=False)
    return MaskRegion(pixels=[divmod(int(p), width) for p in np.sort(chosen)])


class AgreementResult(BaseModel):
    trials: int
    wins: int
    rate: float
    mean_top_delta: float
    mean_random_delta: float


def agreement_trials(
    net: Network,
    images: Sequence[np.ndarray],
    cfg: Optional[LrpConfig] = None,
    fraction: float = 0.25,
    random_draws: int = 1,
    seed: int = 0,
    fill: Fill = "mean",
) -> AgreementResult:
    """
    Occlude the most relevant pixels of each image and compare the score
    change with occluding as many randomly chosen pixels.

    A trial is won when |delta| for the top-relevance region strictly exceeds
    the mean |delta| over ``random_draws`` random regions.
    """
    cfg = cfg or LrpConfig()
    rng = np.random.default_rng(seed)
    wins = 0
    top_deltas, random_deltas = [], []
    for img in images:
        x = image_to_input(img)
        rel = explain(net, x, cfg)
        top_region = top_relevance_region(rel.heatmap, fraction)
        top = OcclusionSpec(regions=[top_region], fill=fill)
        occluded = apply_occlusion(img, top)
        top_score = predict(net, image_to_input(occluded), cfg.output_selector)
        top_delta = abs(top_score - rel.score)

        draws = []
        height, width = img.shape[:2]
        for _ in range(random_draws):
            region = random_region(height, width, len(top_region.pixels), rng)
            occluded = apply_occlusion(img, OcclusionSpec(regions=[region], fill=fill))
            score = predict(net, image_to_input(occluded), cfg.output_selector)
            draws.append(abs(score - rel.score))
        random_delta = float(np.mean(draws))

        wins += top_delta > random_delta
        top_deltas.append(top_delta)
        random_deltas.append(random_delta)

    trials = len(top_deltas)
    result = AgreementResult(
        trials=trials,
        wins=int(wins),
        rate=wins / trials if trials else 0.0,
        mean_top_delta=float(np.mean(top_deltas)) if trials else 0.0,
        mean_random_delta=float(np.mean(random_deltas)) if trials else 0.0,
    )
    logger.info(f"Occlusion agreement: {result.wins}/{result.trials} trials")
    return result
