from typing import TYPE_CHECKING, Callable, Dict, Tuple

import numpy as np

from heatmapping.errors import NonFiniteGradientError

if TYPE_CHECKING:
    from heatmapping.training.trainer import TrainConfig

Params = Dict[str, np.ndarray]


def sgd_nesterov_step(
    params: Params,
    velocity: Params,
    grad_fn: Callable[[Params], Params],
    cfg: "TrainConfig",
) -> Tuple[Params, Params]:
    """
    One Nesterov momentum update in lookahead form.

    g = grad_fn(params + mu * v); v' = mu * v - lr * g; params' = params + v'

    Args:
        params: Current parameters
        velocity: Current velocity, same keys and shapes as ``params``
        grad_fn: Loss gradient at an arbitrary parameter point
        cfg: Supplies ``learning_rate`` and ``momentum``

    Raises:
        NonFiniteGradientError: If any gradient entry is NaN or Inf
    """
    mu = cfg.momentum
    lookahead = {key: params[key] + mu * velocity[key] for key in params}
    grads = grad_fn(lookahead)

    new_params, new_velocity = {}, {}
    for key in params:
        g = grads[key]
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"non-finite gradient for {key}")
        v = mu * velocity[key] - cfg.learning_rate * g
        new_velocity[key] = v
        new_params[key] = params[key] + v
    return new_params, new_velocity
