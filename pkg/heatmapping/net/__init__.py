from heatmapping.net.layers import Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU
from heatmapping.net.network import ActivationTrace, Network, forward, predict
from heatmapping.net.serialization import load_model, save_model

__all__ = [
    "ActivationTrace",
    "Conv2D",
    "Dense",
    "Flatten",
    "Layer",
    "MaxPool2D",
    "Network",
    "ReLU",
    "forward",
    "load_model",
    "predict",
    "save_model",
]
