from . import ops
from .core import (GraphError, NumericalError, Tensor, as_tensor, get_dtype, grad_enabled,
                   no_grad, precision, set_dtype)
from .ops import DimensionError

__all__ = [
    "DimensionError", "GraphError", "NumericalError", "Tensor", "as_tensor", "get_dtype",
    "grad_enabled", "no_grad", "ops", "precision", "set_dtype",
]
