import json

import numpy as np
import pytest
from pydantic import ValidationError

from heatmapping.errors import OcclusionError
from heatmapping.net import Conv2D, Dense, Flatten, Network, ReLU
from heatmapping.occlusion import (
    EllipseRegion,
    MaskRegion,
    OcclusionSpec,
    RectRegion,
    agreement_trials,
    apply_occlusion,
    load_specs,
    occlusion_sweep,
    positive_fraction,
    region_mask,
    top_relevance_region,
)


@pytest.fixture
def image(rng):
    return rng.uniform(0.0, 1.0, size=(6, 6, 3))


@pytest.fixture
def image_net(rng):
    layers = [
        Conv2D(kernel=rng.standard_normal((2, 3, 3, 3)) / 5.0, bias=np.zeros(2)),
        ReLU(),
        Flatten(),
        Dense(weight=rng.standard_normal((1, 32)) / 5.0, bias=np.zeros(1)),
    ]
    return Network(layers, (3, 6, 6))


def test_empty_spec_is_identity(image):
    out = apply_occlusion(image, OcclusionSpec())
    assert out.tobytes() == image.tobytes()
    assert out is not image


def test_full_rect_with_constant_fill(image):
    spec = OcclusionSpec(
        regions=[RectRegion(coords=(0, 0, 6, 6))], fill=(0.3, 0.3, 0.3)
    )
    out = apply_occlusion(image, spec)
    np.testing.assert_array_equal(out, np.full_like(image, 0.3))


def test_half_rect_with_mean_fill(image):
    spec = OcclusionSpec(regions=[RectRegion(coords=(0, 0, 3, 6))])
    out = apply_occlusion(image, spec)
    np.testing.assert_array_equal(out[:, 3:], image[:, 3:])
    mean = np.broadcast_to(image.mean(axis=(0, 1)), (6, 3, 3))
    np.testing.assert_array_equal(out[:, :3], mean)


def test_ellipse_mask():
    spec = OcclusionSpec(regions=[EllipseRegion(coords=(2, 2, 1, 1))])
    mask = region_mask(spec, 4, 4)
    expected = np.zeros((4, 4), dtype=bool)
    expected[1:3, 1:3] = True
    np.testing.assert_array_equal(mask, expected)


def test_regions_are_unioned():
    spec = OcclusionSpec(
        regions=[RectRegion(coords=(0, 0, 1, 1)), MaskRegion(pixels=[(3, 3), (0, 0)])]
    )
    mask = region_mask(spec, 4, 4)
    assert mask.sum() == 2
    assert mask[0, 0] and mask[3, 3]


def test_out_of_bounds_region_is_named(image):
    spec = OcclusionSpec(
        regions=[RectRegion(coords=(0, 0, 2, 2)), RectRegion(coords=(5, 5, 2, 2))]
    )
    with pytest.raises(OcclusionError) as excinfo:
        apply_occlusion(image, spec)
    assert excinfo.value.region_index == 1
    assert str(excinfo.value).startswith("region 1: ")


def test_sweep_names_the_offending_spec(image_net, image):
    specs = [
        OcclusionSpec(name="ok", regions=[RectRegion(coords=(0, 0, 2, 2))]),
        OcclusionSpec(name="off-image", regions=[MaskRegion(pixels=[(6, 0)])]),
    ]
    with pytest.raises(OcclusionError, match="off-image") as excinfo:
        occlusion_sweep(image_net, image, specs)
    assert excinfo.value.region_index == 1


def test_sweep_without_specs_reports_baseline(image_net, image, tmp_path):
    report = occlusion_sweep(image_net, image, [])
    assert report.rows == ()
    report.to_csv(tmp_path / "occlusion.csv")
    lines = (tmp_path / "occlusion.csv").read_text().splitlines()
    assert lines[0] == "name,baseline,occluded,delta,relevance_fraction"
    assert len(lines) == 2
    assert lines[1].startswith("baseline,")


def test_sweep_rows(image_net, image):
    specs = [
        OcclusionSpec(name="original"),
        OcclusionSpec(name="left", regions=[RectRegion(coords=(0, 0, 3, 6))]),
        OcclusionSpec(regions=[EllipseRegion(coords=(3, 3, 2, 2))], fill=(0, 0, 0)),
    ]
    report = occlusion_sweep(image_net, image, specs)
    assert [row.name for row in report.rows] == ["original", "left", "spec-2"]
    original = report.rows[0]
    assert original.occluded == original.baseline
    assert original.relevance_fraction == 0.0
    for row in report.rows:
        assert row.baseline == report.baseline
        assert row.delta == row.occluded - row.baseline
        assert 0.0 <= row.relevance_fraction <= 1.0
    assert len(report.heatmaps) == len(report.images) == 3


def test_sweep_is_deterministic(image_net, image):
    specs = [OcclusionSpec(regions=[RectRegion(coords=(1, 1, 3, 2))])]
    first = occlusion_sweep(image_net, image, specs)
    second = occlusion_sweep(image_net, image, specs)
    assert first.rows == second.rows
    assert first.baseline_heatmap.tobytes() == second.baseline_heatmap.tobytes()


def test_positive_fraction():
    heatmap = np.array([[1.0, -2.0], [3.0, 0.0]])
    mask = np.array([[True, True], [False, False]])
    assert positive_fraction(heatmap, mask) == 0.25
    assert positive_fraction(-np.abs(heatmap), mask) == 0.0


def test_top_relevance_region_breaks_ties_by_index():
    region = top_relevance_region(np.array([[1.0, 3.0], [3.0, 0.0]]), fraction=0.5)
    assert region.pixels == [(0, 1), (1, 0)]


def test_load_specs(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(
        json.dumps(
            {
                "specs": [
                    {"name": "original", "regions": []},
                    {"name": "mouth", "shape": "rect", "coords": [1, 2, 3, 1]},
                    {
                        "name": "eyes",
                        "regions": [
                            {"shape": "ellipse", "coords": [2, 2, 1, 1]},
                            {"shape": "mask", "pixels": [[0, 0]]},
                        ],
                        "fill": [0.1, 0.2, 0.3],
                    },
                ]
            }
        )
    )
    specs = load_specs(path)
    assert [s.label(i) for i, s in enumerate(specs)] == ["original", "mouth", "eyes"]
    assert specs[1].regions == [RectRegion(coords=(1, 2, 3, 1))]
    assert specs[1].fill == "mean"
    assert specs[2].fill == (0.1, 0.2, 0.3)


def test_load_specs_rejects_bad_json(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text("[{")
    with pytest.raises(OcclusionError):
        load_specs(path)


@pytest.mark.parametrize(
    "entry",
    [
        {"shape": "rect", "coords": [0, 0, 0, 2]},
        {"shape": "hexagon", "coords": [0, 0, 1, 1]},
        {"regions": [], "fill": [1.5, 0, 0]},
    ],
)
def test_invalid_specs(entry):
    with pytest.raises(ValidationError):
        OcclusionSpec.model_validate(entry)


def test_agreement_trials_bookkeeping(image_net, rng):
    images = [rng.uniform(0.0, 1.0, size=(6, 6, 3)) for _ in range(4)]
    result = agreement_trials(image_net, images, random_draws=2, seed=3)
    assert result.trials == 4
    assert 0 <= result.wins <= 4
    assert result.rate == result.wins / 4
    assert result == agreement_trials(image_net, images, random_draws=2, seed=3)
