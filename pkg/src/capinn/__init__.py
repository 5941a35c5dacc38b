"""Curvature-aware first-order optimizers for physics-informed neural networks."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
