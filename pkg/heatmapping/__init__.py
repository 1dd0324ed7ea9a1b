"""Layer-wise relevance propagation for small feedforward ConvNets."""

__version__ = "0.1.0"
