import math
from enum import Enum
from typing import Annotated, Literal, NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, model_validator

from heatmapping.errors import ShapeError
from heatmapping.logger import get_logger

logger = get_logger(__name__)

DEFAULT_EPSILON = 1e-9


class EpsilonRule(BaseModel):
    """Proportional redistribution with a sign-stabilized denominator."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["epsilon"] = "epsilon"
    epsilon: FiniteFloat = Field(default=DEFAULT_EPSILON, ge=0)


class AlphaBetaRule(BaseModel):
    """Separate redistribution of positive and negative contributions."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["alpha-beta"] = "alpha-beta"
    alpha: FiniteFloat = 2.0
    beta: FiniteFloat = -1.0

    @property
    def conserving(self) -> bool:
        return math.isclose(self.alpha + self.beta, 1.0, rel_tol=0.0, abs_tol=1e-12)


class BiasPolicy(str, Enum):
    IGNORE = "ignore_bias"
    ABSORB = "absorb_bias"


class LrpConfig(BaseModel):
    """
    Rule selection and parameters for one relevance pass.

    Defaults to alpha=2, beta=-1 with biases absorbed into the denominators
    and per-layer renormalization onto the propagated score.
    """

    model_config = ConfigDict(frozen=True)

    rule: Annotated[
        Union[EpsilonRule, AlphaBetaRule], Field(discriminator="kind")
    ] = Field(default_factory=AlphaBetaRule)
    bias_policy: BiasPolicy = BiasPolicy.ABSORB
    renormalize: bool = True
    output_selector: int = Field(default=0, ge=0)
    strict_conservation: bool = False

    @model_validator(mode="after")
    def _check_strict_conservation(self):
        if (
            self.strict_conservation
            and isinstance(self.rule, AlphaBetaRule)
            and not self.rule.conserving
        ):
            raise ValueError(
                f"strict conservation requires alpha + beta = 1, "
                f"got alpha={self.rule.alpha}, beta={self.rule.beta}"
            )
        return self

    @property
    def conserving(self) -> bool:
        """Whether the rule alone preserves relevance between layers."""
        if isinstance(self.rule, AlphaBetaRule):
            return self.rule.conserving
        return self.rule.epsilon == 0

    @classmethod
    def epsilon(cls, epsilon: float = DEFAULT_EPSILON, **kwargs) -> "LrpConfig":
        return cls(rule=EpsilonRule(epsilon=epsilon), **kwargs)

    @classmethod
    def alpha_beta(
        cls, alpha: float = 2.0, beta: float = -1.0, **kwargs
    ) -> "LrpConfig":
        return cls(rule=AlphaBetaRule(alpha=alpha, beta=beta), **kwargs)


class Redistribution(NamedTuple):
    relevance: np.ndarray
    # columns whose denominator vanished while carrying relevance
    zero_denominators: int
    # alpha-beta columns where only one of z+ / z- has mass and the missing
    # side has a nonzero coefficient
    one_sided: int


def _project(z: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.matmul(z, s[..., None])[..., 0]


def _epsilon(z, relevance, rule: EpsilonRule, bias) -> Redistribution:
    denominator = z.sum(axis=-2)
    if bias is not None:
        denominator = denominator + bias
    # sign(0) is taken as +1
    stabilized = denominator + rule.epsilon * np.where(denominator >= 0, 1.0, -1.0)
    zero = stabilized == 0
    s = np.where(zero, 0.0, relevance / np.where(zero, 1.0, stabilized))
    lost = int(np.count_nonzero(zero & (relevance != 0)))
    return Redistribution(_project(z, s), lost, 0)


def _alpha_beta(z, relevance, rule: AlphaBetaRule, bias) -> Redistribution:
    z_pos = np.maximum(z, 0.0)
    z_neg = np.minimum(z, 0.0)
    d_pos = z_pos.sum(axis=-2)
    d_neg = z_neg.sum(axis=-2)
    if bias is not None:
        d_pos = d_pos + np.maximum(bias, 0.0)
        d_neg = d_neg + np.minimum(bias, 0.0)

    no_pos = d_pos == 0
    no_neg = d_neg == 0
    s_pos = np.where(no_pos, 0.0, rule.alpha * relevance / np.where(no_pos, 1.0, d_pos))
    s_neg = np.where(no_neg, 0.0, rule.beta * relevance / np.where(no_neg, 1.0, d_neg))

    live = relevance != 0
    lost = int(np.count_nonzero(live & no_pos & no_neg))
    one_sided = live & (
        (no_neg & ~no_pos & (rule.beta != 0)) | (no_pos & ~no_neg & (rule.alpha != 0))
    )
    out = _project(z_pos, s_pos) + _project(z_neg, s_neg)
    return Redistribution(out, lost, int(np.count_nonzero(one_sided)))


def redistribute(
    z: np.ndarray,
    relevance: np.ndarray,
    rule: Union[EpsilonRule, AlphaBetaRule],
    bias: Optional[np.ndarray] = None,
) -> Redistribution:
    """
    Core linear-layer redistribution with diagnostics.

    ``z`` holds weighted activations with lower neurons along axis -2 and
    upper neurons along axis -1; leading axes are batch axes (one per
    convolution output position). ``bias``, when given, joins every column's
    denominator as a virtual unit-activation input whose share is dropped.
    """
    if z.ndim < 2 or z.shape[-1] != relevance.shape[-1]:
        raise ShapeError(
            f"weighted activations {z.shape} do not match "
            f"upper relevance {relevance.shape}"
        )
    if isinstance(rule, EpsilonRule):
        return _epsilon(z, relevance, rule, bias)
    return _alpha_beta(z, relevance, rule, bias)


def redistribute_linear(
    z: np.ndarray,
    relevance: np.ndarray,
    cfg: LrpConfig,
    bias: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Redistribute upper-layer relevance onto the lower layer of a linear map.

    Args:
        z: Weighted activations, one row per lower neuron, one column per upper neuron
        relevance: Upper-layer relevance, one entry per column
        cfg: Rule selection
        bias: Optional per-column bias absorbed into the denominators

    Returns:
        Lower-layer relevance, one entry per row
    """
    z = np.asarray(z, dtype=np.float64)
    relevance = np.asarray(relevance, dtype=np.float64)
    step = redistribute(z, relevance, cfg.rule, bias)
    if step.zero_denominators:
        logger.warning(
            f"{step.zero_denominators} column(s) with zero denominator "
            "carried relevance; "
            "conservation is violated"
        )
    return step.relevance


def redistribute_maxpool(window_values: np.ndarray, relevance: float) -> np.ndarray:
    """Assign all of ``relevance`` to the window's maximum (lowest index on ties)."""
    window_values = np.asarray(window_values, dtype=np.float64)
    if window_values.size == 0:
        raise ShapeError("max-pool window is empty")
    out = np.zeros(window_values.size)
    out[int(np.argmax(window_values.reshape(-1)))] = relevance
    return out.reshape(window_values.shape)
