from heatmapping.lrp.engine import (
    ConservationReport,
    RelevanceMap,
    check_conservation,
    explain,
    relprop,
    renormalize,
)
from heatmapping.lrp.rules import (
    AlphaBetaRule,
    BiasPolicy,
    EpsilonRule,
    LrpConfig,
    redistribute_linear,
    redistribute_maxpool,
)

__all__ = [
    "AlphaBetaRule",
    "BiasPolicy",
    "ConservationReport",
    "EpsilonRule",
    "LrpConfig",
    "RelevanceMap",
    "check_conservation",
    "explain",
    "redistribute_linear",
    "redistribute_maxpool",
    "relprop",
    "renormalize",
]
