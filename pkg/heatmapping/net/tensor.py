from typing import Optional, Tuple

import numpy as np

from heatmapping.errors import NonFiniteError

Shape = Tuple[int, ...]


def frozen(data) -> np.ndarray:
    """Return a read-only float64 copy of ``data``."""
    arr = np.array(data, dtype=np.float64, copy=True, order="C")
    arr.flags.writeable = False
    return arr


def check_finite(arr: np.ndarray, what: str, layer_index: Optional[int] = None):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} contains NaN or Inf values", layer_index)
