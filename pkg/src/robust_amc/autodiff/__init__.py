"""Reverse-mode automatic differentiation over dense float64 tensors."""

from . import ops
from .graph import Graph, forward
from .tape import GradientTape, grad, grad2
from .tensor import Node, Tensor, as_tensor

__all__ = [
    "Graph",
    "GradientTape",
    "Node",
    "Tensor",
    "as_tensor",
    "forward",
    "grad",
    "grad2",
    "ops",
]
