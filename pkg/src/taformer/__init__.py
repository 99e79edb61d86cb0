"""Target-aware video prediction for aerial scenes: frames and target boxes in,
future frames and future boxes out."""

from .config import RunConfig, desk_config
from .model import Prediction, TAFormer

__all__ = ["RunConfig", "desk_config", "TAFormer", "Prediction"]
__version__ = "0.1.0"
