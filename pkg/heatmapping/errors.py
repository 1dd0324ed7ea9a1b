from typing import Optional


class HeatmappingError(Exception):
    """Base class for every error raised by the library."""


class ShapeError(HeatmappingError):
    def __init__(self, message: str, layer_index: Optional[int] = None):
        self.layer_index = layer_index
        if layer_index is not None:
            message = f"layer {layer_index}: {message}"
        super().__init__(message)


class NonFiniteError(HeatmappingError):
    def __init__(self, message: str, layer_index: Optional[int] = None):
        self.layer_index = layer_index
        if layer_index is not None:
            message = f"layer {layer_index}: {message}"
        super().__init__(message)


class ModelFormatError(HeatmappingError):
    """Malformed or inconsistent model manifest."""


class BlobLengthError(ModelFormatError):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"weight blob length mismatch: expected {expected} bytes, got {actual}"
        )


class TraceMismatchError(HeatmappingError):
    """An activation trace does not belong to the network it is used with."""


class DatasetError(HeatmappingError):
    pass


class ScoreRangeError(DatasetError):
    pass


class NonFiniteGradientError(HeatmappingError):
    pass


class DivergenceError(HeatmappingError):
    def __init__(self, epoch: int, reason: str):
        self.epoch = epoch
        super().__init__(f"training diverged in epoch {epoch}: {reason}")


class OcclusionError(HeatmappingError):
    def __init__(self, message: str, region_index: Optional[int] = None):
        self.region_index = region_index
        if region_index is not None:
            message = f"region {region_index}: {message}"
        super().__init__(message)
