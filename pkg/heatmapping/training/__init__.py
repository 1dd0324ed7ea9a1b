from heatmapping.training.data import (
    LabeledDataset,
    LabeledItem,
    load_dataset,
    rescale_score,
    split_dataset,
    unscale_score,
)
from heatmapping.training.gradcheck import GradCheckResult, check_gradients
from heatmapping.training.optim import sgd_nesterov_step
from heatmapping.training.trainer import (
    LearningCurve,
    TrainConfig,
    TrainingMode,
    mae,
    replace_head,
    train,
)

__all__ = [
    "GradCheckResult",
    "LabeledDataset",
    "LabeledItem",
    "LearningCurve",
    "TrainConfig",
    "TrainingMode",
    "check_gradients",
    "load_dataset",
    "mae",
    "replace_head",
    "rescale_score",
    "sgd_nesterov_step",
    "split_dataset",
    "train",
    "unscale_score",
]
