"""Arguments and helpers shared by several commands."""

import argparse
import re
from pathlib import Path
from typing import Optional

import numpy as np

from heatmapping.commands import arg
from heatmapping.config import settings
from heatmapping.logger import get_logger
from heatmapping.lrp.rules import (
    DEFAULT_EPSILON,
    AlphaBetaRule,
    BiasPolicy,
    EpsilonRule,
    LrpConfig,
)
from heatmapping.render import RenderConfig, pool_channels

logger = get_logger(__name__)

SEED_ARGUMENT = arg(
    "--seed",
    type=int,
    default=settings.DEFAULT_SEED,
    help=f"Random seed (default: {settings.DEFAULT_SEED})",
)

OUT_ARGUMENT = arg(
    "--out",
    type=Path,
    default=None,
    help="Output directory (default: $OUTPUT_DIR/<command>)",
)

RULE_ARGUMENTS = [
    arg(
        "--rule",
        choices=["alpha-beta", "epsilon"],
        default="alpha-beta",
        help="Relevance rule (default: alpha-beta)",
    ),
    arg("--alpha", type=float, default=2.0, help="Positive weight (default: 2)"),
    arg("--beta", type=float, default=-1.0, help="Negative weight (default: -1)"),
    arg(
        "--epsilon",
        type=float,
        default=DEFAULT_EPSILON,
        help=f"Stabilizer of the epsilon rule (default: {DEFAULT_EPSILON:g})",
    ),
    arg(
        "--renormalize",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Rescale each layer's relevance to the score (default: on)",
    ),
    arg(
        "--bias-policy",
        choices=[p.value for p in BiasPolicy],
        default=BiasPolicy.ABSORB.value,
        help="How biases enter the denominators (default: absorb_bias)",
    ),
    arg(
        "--output-index",
        type=int,
        default=0,
        help="Output unit to explain (default: 0)",
    ),
]

SCALE_ARGUMENT = arg(
    "--scale",
    type=float,
    default=None,
    help="Fixed relevance scale for rendering (default: max |relevance|)",
)


def output_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return args.out
    return Path(settings.OUTPUT_DIR) / args.command


def lrp_config(args: argparse.Namespace) -> LrpConfig:
    if args.rule == "epsilon":
        rule = EpsilonRule(epsilon=args.epsilon)
    else:
        rule = AlphaBetaRule(alpha=args.alpha, beta=args.beta)
    cfg = LrpConfig(
        rule=rule,
        bias_policy=BiasPolicy(args.bias_policy),
        renormalize=args.renormalize,
        output_selector=args.output_index,
    )
    if isinstance(rule, AlphaBetaRule) and not rule.conserving:
        logger.warning(
            f"⚠️ alpha + beta = {rule.alpha + rule.beta:g} != 1; "
            "relevance is not expected to be conserved"
        )
    return cfg


def render_config(
    scale: Optional[float], overlay_alpha: Optional[float] = None
) -> RenderConfig:
    if scale is None:
        return RenderConfig(overlay_alpha=overlay_alpha)
    return RenderConfig.fixed(scale, overlay_alpha)


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "_", name).strip("_") or "spec"


def shared_render_config(scale: Optional[float], heatmaps) -> RenderConfig:
    """``--scale`` if given, else the peak |pixel relevance| over ``heatmaps``."""
    if scale is None:
        peak = max(
            (float(np.max(np.abs(pool_channels(h)))) for h in heatmaps), default=0.0
        )
        scale = peak if peak > 0 else None
    return render_config(scale)
