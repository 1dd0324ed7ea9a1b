from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from heatmapping.net.network import Network, rebuild_layers, run_layers
from heatmapping.training.trainer import TrainingMode, sample_gradients, trainable_keys

DEFAULT_STEP = 1e-5
DEFAULT_TOL = 1e-4
# keeps near-zero gradients from turning rounding noise into huge relative errors
ERROR_FLOOR = 1e-6


class GradCheckResult(BaseModel):
    name: str
    checked: int
    max_rel_error: float
    passed: bool


def _loss(net: Network, flat: Dict[str, np.ndarray], x: np.ndarray, y: float) -> float:
    layers = rebuild_layers(net.layers, flat)
    out = run_layers(layers, x)[1][-1]
    err = float(out.reshape(-1)[0]) - y
    return 0.5 * err * err


def _relative_error(analytic: float, numeric: float, floor: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _summarize(name: str, errors: List[float], tol: float) -> GradCheckResult:
    worst = max(errors, default=0.0)
    return GradCheckResult(
        name=name, checked=len(errors), max_rel_error=worst, passed=worst <= tol
    )


def check_gradients(
    net: Network,
    x: np.ndarray,
    y: float,
    mode: TrainingMode = TrainingMode.FULL,
    step: float = DEFAULT_STEP,
    tol: float = DEFAULT_TOL,
    max_entries: Optional[int] = None,
    seed: int = 0,
    floor: float = ERROR_FLOOR,
) -> List[GradCheckResult]:
    """
    Compare backprop gradients with central finite differences.

    Checks every parameter tensor trainable under ``mode`` and, in full mode,
    the input itself. ``max_entries`` caps the number of randomly chosen
    entries checked per tensor; ``floor`` bounds the denominator of the
    relative error from below.
    """
    rng = np.random.default_rng(seed)
    keys = trainable_keys(net, mode)
    params = {key: np.array(value) for key, value in net.params().items()}
    _, _, analytic, grad_input = sample_gradients(net.layers, 0, x, y, set(keys))

    def pick(size: int) -> np.ndarray:
        if max_entries is None or size <= max_entries:
            return np.arange(size)
        return np.sort(rng.choice(size, max_entries, replace=False))

    results = []
    for key in keys:
        base = params[key]
        errors = []
        for flat_index in pick(base.size):
            index = np.unravel_index(flat_index, base.shape)
            plus, minus = base.copy(), base.copy()
            plus[index] += step
            minus[index] -= step
            numeric = (
                _loss(net, {**params, key: plus}, x, y)
                - _loss(net, {**params, key: minus}, x, y)
            ) / (2 * step)
            errors.append(_relative_error(float(analytic[key][index]), numeric, floor))
        results.append(_summarize(key, errors, tol))

    if mode is TrainingMode.FULL:
        errors = []
        for flat_index in pick(x.size):
            index = np.unravel_index(flat_index, x.shape)
            plus, minus = x.copy(), x.copy()
            plus[index] += step
            minus[index] -= step
            numeric = (
                _loss(net, params, plus, y) - _loss(net, params, minus, y)
            ) / (2 * step)
            errors.append(_relative_error(float(grad_input[index]), numeric, floor))
        results.append(_summarize("input", errors, tol))

    return results
