import numpy as np
import pytest

from heatmapping.lrp import check_conservation, explain
from heatmapping.occlusion import agreement_trials
from heatmapping.toy import TOY_SAMPLES, brightness_scores, make_base_model, toy_images
from heatmapping.training.data import image_to_input

pytestmark = pytest.mark.slow


def test_toy_data_is_seeded():
    first, second = toy_images(3, seed=9), toy_images(3, seed=9)
    assert all(a.tobytes() == b.tobytes() for a, b in zip(first, second))
    scores = brightness_scores(toy_images(50, seed=9))
    assert scores.min() == 1.0 and scores.max() == 9.0


def test_base_model_is_bias_free_and_conserving(toy_inputs):
    net = make_base_model(seed=0)
    assert not net.has_bias()
    rel = explain(net, image_to_input(toy_inputs[0]))
    assert check_conservation(rel, rel.score, 1e-9).passed


def test_dense_only_retraining_halves_training_error(toy_run):
    curve = toy_run["curve"]
    assert len(toy_run["dataset"]) == TOY_SAMPLES
    assert [p.epoch for p in curve.points] == list(range(1, 31))
    assert curve.points[-1].train_mae < 0.5 * curve.points[0].train_mae

    base, trained = toy_run["base"].params(), toy_run["trained"].params()
    assert trained["0.kernel"].tobytes() == base["0.kernel"].tobytes()
    assert toy_run["trained"].output_shape == (1,)


def test_top_relevance_occlusion_beats_random(toy_run, toy_inputs):
    result = agreement_trials(toy_run["trained"], toy_inputs, seed=0)
    assert result.trials == 100
    assert result.rate >= 0.9
    assert result.mean_top_delta > result.mean_random_delta


def test_trained_heatmaps_are_finite(toy_run, toy_inputs):
    for img in toy_inputs[:10]:
        rel = explain(toy_run["trained"], image_to_input(img))
        assert np.all(np.isfinite(rel.heatmap))
        assert check_conservation(rel, rel.score, 1e-9).passed
