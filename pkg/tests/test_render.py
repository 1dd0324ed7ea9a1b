import numpy as np
import pytest
from PIL import Image
from pydantic import ValidationError

from heatmapping.errors import ShapeError
from heatmapping.render import (
    RenderConfig,
    overlay,
    pool_channels,
    render,
    side_by_side,
    write_image,
)

WHITE = [255, 255, 255]


def colormap_position(rgb):
    """Signed distance along white -> red -> dark red, negatives mirrored."""
    r, g, b = (int(c) for c in rgb)
    if b > r:
        return -colormap_position((b, g, r))
    if g > 0:
        return (255 - g) / 255 * 0.5
    return 0.5 + (255 - r) / 127 * 0.5


def test_all_zero_renders_neutral():
    rgb = render(np.zeros((3, 4, 5)))
    assert rgb.shape == (4, 5, 3)
    assert rgb.dtype == np.uint8
    assert np.all(rgb == 255)


def test_single_positive_pixel_hits_positive_endpoint():
    relevance = np.zeros((3, 4, 4))
    relevance[1, 2, 3] = 0.7
    rgb = render(relevance)
    np.testing.assert_array_equal(rgb[2, 3], [128, 0, 0])
    mask = np.ones((4, 4), dtype=bool)
    mask[2, 3] = False
    assert np.all(rgb[mask] == 255)


def test_negation_swaps_red_and_blue(rng):
    relevance = rng.standard_normal((3, 6, 6))
    positive, negative = render(relevance), render(-relevance)
    np.testing.assert_array_equal(negative, positive[..., ::-1])


def test_half_scale_is_pure_red_and_blue():
    rgb = render(np.array([[1.0, 0.5, -0.5, -1.0]]))
    np.testing.assert_array_equal(
        rgb[0], [[128, 0, 0], [255, 0, 0], [0, 0, 255], [0, 0, 128]]
    )


def test_fixed_scale_clips():
    rgb = render(np.array([[4.0, -4.0, 0.5]]), RenderConfig.fixed(1.0))
    np.testing.assert_array_equal(rgb[0], [[128, 0, 0], [0, 0, 128], [255, 0, 0]])


def test_colour_is_monotone_in_relevance():
    ramp = np.linspace(-3.0, 3.0, 601)[None, :]
    rgb = render(ramp, RenderConfig.fixed(2.0))[0]
    positions = [colormap_position(c) for c in rgb]
    assert positions[0] == -1.0
    assert positions[-1] == 1.0
    assert all(q >= p for p, q in zip(positions, positions[1:]))


def test_fixed_scale_is_shared_across_images(rng):
    first = rng.standard_normal((3, 5, 5))
    second = rng.standard_normal((3, 5, 5)) * 10.0
    second[:, :2] = first[:, :2]
    cfg = RenderConfig.fixed(2.5)
    np.testing.assert_array_equal(render(first, cfg)[:2], render(second, cfg)[:2])


def test_fixed_normalization_needs_scale():
    with pytest.raises(ValidationError):
        RenderConfig(normalization="fixed")


def test_overlay_alpha_is_validated():
    assert RenderConfig().overlay_alpha is None
    assert RenderConfig(overlay_alpha=0.4).overlay_alpha == 0.4
    with pytest.raises(ValidationError):
        RenderConfig(overlay_alpha=1.5)


def test_channels_are_summed():
    relevance = np.stack([np.eye(2), -np.eye(2), np.eye(2)])
    np.testing.assert_array_equal(pool_channels(relevance), np.eye(2))
    with pytest.raises(ShapeError):
        pool_channels(np.zeros(4))


def test_overlay_endpoints():
    image = np.full((2, 2, 3), 0.2)
    heatmap = np.zeros((2, 2, 3), dtype=np.uint8)
    np.testing.assert_array_equal(overlay(image, heatmap, 0.0), np.full((2, 2, 3), 51))
    np.testing.assert_array_equal(overlay(image, heatmap, 1.0), heatmap)


def test_side_by_side_pads_with_white():
    a = np.zeros((3, 2, 3), dtype=np.uint8)
    b = np.zeros((2, 1, 3), dtype=np.uint8)
    panel = side_by_side([a, b], gap=1)
    assert panel.shape == (3, 4, 3)
    np.testing.assert_array_equal(panel[:, 2], [WHITE] * 3)
    np.testing.assert_array_equal(panel[2, 3], WHITE)


@pytest.mark.parametrize("suffix", [".ppm", ".png"])
def test_write_image(tmp_path, rng, suffix):
    rgb = render(rng.standard_normal((3, 5, 7)))
    path = tmp_path / f"heatmap{suffix}"
    write_image(rgb, path)
    with Image.open(path) as img:
        assert img.size == (7, 5)
        np.testing.assert_array_equal(np.asarray(img.convert("RGB")), rgb)
    if suffix == ".ppm":
        assert path.read_bytes().startswith(b"P6")


def test_write_image_rejects_unknown_suffix(tmp_path):
    with pytest.raises(ValueError):
        write_image(np.zeros((1, 1, 3), dtype=np.uint8), tmp_path / "heatmap.gif")
