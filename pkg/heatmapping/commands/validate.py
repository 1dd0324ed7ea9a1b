from pathlib import Path
from typing import List, NamedTuple

import numpy as np

from heatmapping.commands import arg, cli_command
from heatmapping.commands.options import SEED_ARGUMENT
from heatmapping.config import settings
from heatmapping.errors import HeatmappingError
from heatmapping.logger import get_logger
from heatmapping.lrp.engine import check_conservation, explain
from heatmapping.lrp.rules import AlphaBetaRule, BiasPolicy, EpsilonRule, LrpConfig
from heatmapping.net.network import Network
from heatmapping.net.serialization import load_model
from heatmapping.training.gradcheck import check_gradients
from heatmapping.training.trainer import TrainingMode

logger = get_logger(__name__)

PASS = "pass"
FAIL = "fail"
# drift is present but accounted for by biases or counted diagnostics
EXPLAINED = "explained"

# small next to the distance of random pre-activations from ReLU and pooling kinks
SPOT_CHECK_STEP = 1e-6
SPOT_CHECK_FLOOR = 1e-4


class CheckResult(NamedTuple):
    name: str
    status: str
    detail: str


def conservation_check(
    net: Network, x: np.ndarray, cfg: LrpConfig, tol: float
) -> CheckResult:
    rel = explain(net, x, cfg)
    report = check_conservation(rel, rel.score, tol)
    name = f"conservation[{cfg.rule.kind}]"
    detail = f"drift {report.drift:.3g} (tol {tol:g})"
    if net.has_bias():
        detail += f"; biases present ({cfg.bias_policy.value})"
        return CheckResult(name, EXPLAINED, detail)
    if report.passed:
        return CheckResult(name, PASS, detail)
    if report.zero_denominators or report.one_sided_columns or report.unscaled_layers:
        return CheckResult(
            name,
            EXPLAINED,
            f"{detail}; {report.zero_denominators} zero denominators, "
            f"{report.one_sided_columns} one-sided columns",
        )
    return CheckResult(name, FAIL, detail)


def run_checks(
    model_path: Path,
    seed: int,
    bias_policy: BiasPolicy,
    tol: float,
    max_entries: int,
) -> List[CheckResult]:
    """
    Load the model, check relevance conservation on a seeded random input
    under both rules (renormalization off), and spot-check gradients.

    Stops after a failed load since nothing else can run.
    """
    try:
        net = load_model(model_path)
    except (HeatmappingError, OSError) as e:
        return [CheckResult("load", FAIL, str(e))]
    results = [
        CheckResult("load", PASS, f"{len(net.layers)} layers"),
        CheckResult(
            "shape-chain", PASS, f"{net.input_shape} -> {net.output_shape}"
        ),
    ]

    x = np.random.default_rng(seed).standard_normal(net.input_shape)
    try:
        for rule in (AlphaBetaRule(), EpsilonRule(epsilon=0.0)):
            cfg = LrpConfig(rule=rule, bias_policy=bias_policy, renormalize=False)
            results.append(conservation_check(net, x, cfg, tol))
    except HeatmappingError as e:
        return results + [CheckResult("conservation", FAIL, str(e))]

    grads = check_gradients(
        net,
        x,
        0.5,
        mode=TrainingMode.FULL,
        step=SPOT_CHECK_STEP,
        max_entries=max_entries,
        seed=seed,
        floor=SPOT_CHECK_FLOOR,
    )
    worst = max((g.max_rel_error for g in grads), default=0.0)
    failed = [g.name for g in grads if not g.passed]
    results.append(
        CheckResult(
            "gradients",
            FAIL if failed else PASS,
            f"max relative error {worst:.3g} over {len(grads)} tensors"
            + (f"; failing: {', '.join(failed)}" if failed else ""),
        )
    )
    return results


@cli_command(
    name="validate",
    description="Check a model's format, relevance conservation and gradients",
    arguments=[
        arg("--model", type=Path, required=True, help="Model manifest (.json)"),
        arg(
            "--bias-policy",
            choices=[p.value for p in BiasPolicy],
            default=BiasPolicy.ABSORB.value,
            help="Bias policy for the conservation check (default: absorb_bias)",
        ),
        arg(
            "--tol",
            type=float,
            default=settings.CONSERVATION_TOL,
            help=f"Conservation tolerance (default: {settings.CONSERVATION_TOL:g})",
        ),
        arg(
            "--max-entries",
            type=int,
            default=16,
            help="Entries per tensor in the gradient spot check (default: 16)",
        ),
        SEED_ARGUMENT,
    ],
)
def validate(args) -> int:
    results = run_checks(
        args.model, args.seed, BiasPolicy(args.bias_policy), args.tol, args.max_entries
    )
    for result in results:
        print(f"{result.status.upper():9} {result.name}: {result.detail}")
    failed = [r.name for r in results if r.status == FAIL]
    if failed:
        logger.error(f"❌ Validation failed: {', '.join(failed)}")
        return 1
    logger.info(f"✅ {len(results)} checks passed")
    return 0
