import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from heatmapping.lrp import (
    AlphaBetaRule,
    EpsilonRule,
    LrpConfig,
    redistribute_linear,
    redistribute_maxpool,
)
from heatmapping.lrp.rules import redistribute


def column(values):
    return np.array(values, dtype=np.float64)[:, None]


def test_epsilon_proportional_split():
    out = redistribute_linear(column([3.0, 1.0]), [4.0], LrpConfig.epsilon(0.0))
    np.testing.assert_array_equal(out, [3.0, 1.0])


def test_epsilon_zero_denominator_takes_positive_sign():
    out = redistribute_linear(column([2.0, -2.0]), [1.0], LrpConfig.epsilon(0.5))
    np.testing.assert_array_equal(out, [4.0, -4.0])


def test_epsilon_absorbs_part_of_relevance():
    out = redistribute_linear(column([3.0, 1.0]), [4.0], LrpConfig.epsilon(4.0))
    np.testing.assert_allclose(out, [1.5, 0.5])


def test_alpha_beta_single_neuron():
    cfg = LrpConfig.alpha_beta(2.0, -1.0)
    out = redistribute_linear(column([2.0, -1.0]), [1.0], cfg)
    np.testing.assert_array_equal(out, [2.0, -1.0])
    assert out.sum() == 1.0


def test_alpha_beta_one_zero_matches_epsilon_zero_on_positive_contributions(rng):
    z = rng.uniform(0.1, 1.0, size=(6, 4))
    relevance = rng.standard_normal(4)
    ab = redistribute_linear(z, relevance, LrpConfig.alpha_beta(1.0, 0.0))
    eps = redistribute_linear(z, relevance, LrpConfig.epsilon(0.0))
    np.testing.assert_allclose(ab, eps, rtol=1e-12)


def test_vanishing_negative_side_contributes_nothing():
    step = redistribute(column([2.0, 1.0]), np.array([1.0]), AlphaBetaRule())
    # only alpha * R reaches the inputs
    np.testing.assert_allclose(step.relevance, [4.0 / 3.0, 2.0 / 3.0])
    assert step.one_sided == 1
    assert step.zero_denominators == 0


def test_zero_column_is_a_diagnostic_not_a_crash():
    step = redistribute(column([0.0, 0.0]), np.array([1.0]), EpsilonRule(epsilon=0.0))
    np.testing.assert_array_equal(step.relevance, [0.0, 0.0])
    assert step.zero_denominators == 1


def test_bias_joins_the_denominator():
    step = redistribute(
        column([3.0, 1.0]), np.array([4.0]), EpsilonRule(epsilon=0.0), np.array([4.0])
    )
    np.testing.assert_array_equal(step.relevance, [1.5, 0.5])


def test_batched_columns_match_loop(rng):
    z = rng.standard_normal((5, 7, 3))
    relevance = rng.standard_normal((5, 3))
    batched = redistribute(z, relevance, AlphaBetaRule()).relevance
    for p in range(5):
        single = redistribute(z[p], relevance[p], AlphaBetaRule()).relevance
        np.testing.assert_allclose(batched[p], single, rtol=1e-12)


@pytest.mark.parametrize(
    "window,relevance,expected",
    [
        ([1.0, 3.0, 2.0, 0.0], 5.0, [0.0, 5.0, 0.0, 0.0]),
        ([2.0, 2.0, 1.0, 1.0], 1.0, [1.0, 0.0, 0.0, 0.0]),
    ],
)
def test_maxpool_winner_takes_all(window, relevance, expected):
    np.testing.assert_array_equal(redistribute_maxpool(window, relevance), expected)


def test_default_config():
    cfg = LrpConfig()
    assert isinstance(cfg.rule, AlphaBetaRule)
    assert (cfg.rule.alpha, cfg.rule.beta) == (2.0, -1.0)
    assert cfg.renormalize
    assert cfg.conserving


def test_strict_conservation_rejects_non_conserving_parameters():
    with pytest.raises(ValidationError, match="alpha \\+ beta = 1"):
        LrpConfig.alpha_beta(2.0, 0.0, strict_conservation=True)
    assert LrpConfig.alpha_beta(3.0, -2.0, strict_conservation=True).conserving


def test_rule_validation():
    with pytest.raises(ValidationError):
        EpsilonRule(epsilon=-1.0)
    with pytest.raises(ValidationError):
        AlphaBetaRule(alpha=float("nan"))
    assert not LrpConfig.epsilon(0.01).conserving
    assert LrpConfig.epsilon(0.0).conserving


def test_maxpool_enumerated_windows():
    for values in itertools.product([0.0, 1.0, 2.0], repeat=4):
        out = redistribute_maxpool(np.array(values).reshape(2, 2), 3.0)
        assert out.sum() == 3.0
        winner = values.index(max(values))
        assert out.reshape(-1)[winner] == 3.0
        assert np.count_nonzero(out) == 1
