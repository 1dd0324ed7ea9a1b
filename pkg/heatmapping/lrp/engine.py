import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from heatmapping.errors import ShapeError, TraceMismatchError
from heatmapping.logger import get_logger
from heatmapping.lrp.rules import BiasPolicy, LrpConfig, Redistribution, redistribute
from heatmapping.net.im2col import col2im
from heatmapping.net.layers import Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU
from heatmapping.net.network import ActivationTrace, Network, forward
from heatmapping.net.tensor import check_finite

logger = get_logger(__name__)

# Upper bound on the weighted-activation entries materialized per conv chunk
CHUNK_ELEMENTS = 1 << 22

_PROPAGATORS: Dict[type, Callable[..., Redistribution]] = {}


def propagates(layer_type: type):
    """Register the relevance propagator for one layer type."""

    def decorator(f: Callable[..., Redistribution]) -> Callable[..., Redistribution]:
        _PROPAGATORS[layer_type] = f
        return f

    return decorator


@dataclass(frozen=True, eq=False)
class RelevanceMap:
    """
    Relevance of every layer's input, from one backward pass.

    ``layers[i]`` is shape-matched to the input activations of layer ``i``;
    ``layers[0]`` is the input-domain heatmap.
    """

    layers: Tuple[np.ndarray, ...]
    output: np.ndarray
    score: float
    names: Tuple[str, ...]
    zero_denominators: int = 0
    one_sided_columns: int = 0
    unscaled_layers: Tuple[int, ...] = ()

    @property
    def heatmap(self) -> np.ndarray:
        return self.layers[0]

    def sums(self) -> List[float]:
        return [float(r.sum()) for r in self.layers]


class ConservationReport(BaseModel):
    layer_names: List[str]
    layer_sums: List[float]
    score: float
    drift: float
    tolerance: float
    passed: bool
    zero_denominators: int = 0
    one_sided_columns: int = 0
    unscaled_layers: List[int] = []


def _weighted_bias(layer, cfg: LrpConfig) -> Optional[np.ndarray]:
    return layer.bias if cfg.bias_policy is BiasPolicy.ABSORB else None


@propagates(Dense)
def _dense(layer: Dense, a: np.ndarray, relevance: np.ndarray, cfg: LrpConfig):
    z = a[:, None] * layer.weight.T
    return redistribute(z, relevance, cfg.rule, _weighted_bias(layer, cfg))


@propagates(Conv2D)
def _conv2d(layer: Conv2D, a: np.ndarray, relevance: np.ndarray, cfg: LrpConfig):
    # each output position is a dense layer over its input patch
    cols = layer.unroll(a)
    weights = layer.kernel_matrix().T
    out_c = layer.kernel.shape[0]
    upper = relevance.reshape(out_c, -1).T
    bias = _weighted_bias(layer, cfg)

    lower = np.empty_like(cols)
    lost = one_sided = 0
    step = max(1, CHUNK_ELEMENTS // weights.size)
    for start in range(0, cols.shape[0], step):
        sl = slice(start, start + step)
        z = cols[sl, :, None] * weights[None, :, :]
        part = redistribute(z, upper[sl], cfg.rule, bias)
        lower[sl] = part.relevance
        lost += part.zero_denominators
        one_sided += part.one_sided

    kh, kw = layer.window
    folded = col2im(lower, a.shape, kh, kw, layer.stride, layer.padding)
    return Redistribution(folded, lost, one_sided)


@propagates(MaxPool2D)
def _maxpool2d(layer: MaxPool2D, a: np.ndarray, relevance: np.ndarray, cfg: LrpConfig):
    return Redistribution(layer.scatter(a, relevance), 0, 0)


@propagates(ReLU)
def _relu(layer: ReLU, a: np.ndarray, relevance: np.ndarray, cfg: LrpConfig):
    return Redistribution(relevance, 0, 0)


@propagates(Flatten)
def _flatten(layer: Flatten, a: np.ndarray, relevance: np.ndarray, cfg: LrpConfig):
    return Redistribution(relevance.reshape(a.shape), 0, 0)


def _check_trace(net: Network, trace: ActivationTrace):
    if len(trace) != len(net.layers) or len(trace.outputs) != len(net.layers):
        raise TraceMismatchError(
            f"trace has {len(trace)} entries, network has {len(net.layers)} layers"
        )
    expected_inputs = (net.input_shape,) + net.shapes[:-1]
    for i, (x, y) in enumerate(zip(trace.inputs, trace.outputs)):
        if x.shape != expected_inputs[i] or y.shape != net.shapes[i]:
            raise TraceMismatchError(
                f"trace entry {i} has shapes {x.shape} -> {y.shape}, "
                f"network expects {expected_inputs[i]} -> {net.shapes[i]}"
            )


def _rescale(relevance: np.ndarray, target: float) -> Tuple[np.ndarray, bool]:
    total = float(relevance.sum())
    if math.isclose(total, target, rel_tol=1e-15, abs_tol=0.0):
        return relevance, True
    if total == 0.0:
        return relevance, False
    return relevance * (target / total), True


def relprop(
    net: Network, trace: ActivationTrace, cfg: Optional[LrpConfig] = None
) -> RelevanceMap:
    """
    Propagate the selected output score back to the input, layer by layer.

    Args:
        net: The network that produced ``trace``
        trace: Activations recorded by ``forward``
        cfg: Rule selection; defaults to alpha=2, beta=-1

    Returns:
        RelevanceMap whose entry 0 is the input heatmap

    Raises:
        TraceMismatchError: If the trace was not produced by ``net``
        ShapeError: If the output selector is out of range
    """
    cfg = cfg or LrpConfig()
    _check_trace(net, trace)

    flat_out = trace.output.reshape(-1)
    if cfg.output_selector >= flat_out.size:
        raise ShapeError(
            f"output selector {cfg.output_selector} out of range "
            f"for {flat_out.size} outputs"
        )
    score = float(flat_out[cfg.output_selector])
    top = np.zeros(flat_out.size)
    top[cfg.output_selector] = score
    top = top.reshape(trace.output.shape)

    layers: List[Optional[np.ndarray]] = [None] * len(net.layers)
    lost = one_sided = 0
    unscaled = []
    relevance = top
    for i in reversed(range(len(net.layers))):
        layer: Layer = net.layers[i]
        step = _PROPAGATORS[type(layer)](layer, trace.inputs[i], relevance, cfg)
        relevance = step.relevance
        lost += step.zero_denominators
        one_sided += step.one_sided
        if cfg.renormalize:
            relevance, scaled = _rescale(relevance, score)
            if not scaled:
                unscaled.append(i)
        check_finite(relevance, f"{layer.kind} relevance", layer_index=i)
        layers[i] = relevance
        logger.debug(
            f"layer {i} ({layer.describe()}): relevance sum {relevance.sum():.6g}"
        )

    if lost:
        logger.warning(f"{lost} zero-denominator column(s) dropped relevance")
    if unscaled:
        logger.warning(
            f"layers {sorted(unscaled)} have zero relevance sum and were not rescaled"
        )

    return RelevanceMap(
        layers=tuple(layers),
        output=top,
        score=score,
        names=tuple(net.layer_names()),
        zero_denominators=lost,
        one_sided_columns=one_sided,
        unscaled_layers=tuple(sorted(unscaled)),
    )


def renormalize(rel: RelevanceMap, target: float) -> RelevanceMap:
    """
    Rescale each layer's relevance so it sums to ``target``.

    Layers already summing to ``target`` are returned untouched; layers
    summing to exactly zero cannot be rescaled and are flagged instead.
    """
    layers = []
    unscaled = set(rel.unscaled_layers)
    for i, relevance in enumerate(rel.layers):
        rescaled, ok = _rescale(relevance, target)
        if not ok:
            unscaled.add(i)
            logger.warning(f"layer {i} relevance sums to zero; left unscaled")
        layers.append(rescaled)
    return replace(rel, layers=tuple(layers), unscaled_layers=tuple(sorted(unscaled)))


def check_conservation(rel: RelevanceMap, fx: float, tol: float) -> ConservationReport:
    """Per-layer relevance sums against ``fx`` and their worst relative drift."""
    sums = rel.sums()
    floor = max(abs(fx), float(np.finfo(np.float64).eps))
    drift = max((abs(s - fx) / floor for s in sums), default=0.0)
    return ConservationReport(
        layer_names=list(rel.names),
        layer_sums=sums,
        score=fx,
        drift=drift,
        tolerance=tol,
        passed=drift <= tol,
        zero_denominators=rel.zero_denominators,
        one_sided_columns=rel.one_sided_columns,
        unscaled_layers=list(rel.unscaled_layers),
    )


def explain(
    net: Network, x: np.ndarray, cfg: Optional[LrpConfig] = None
) -> RelevanceMap:
    """Forward ``x`` and propagate its score in one call."""
    return relprop(net, forward(net, x), cfg)
