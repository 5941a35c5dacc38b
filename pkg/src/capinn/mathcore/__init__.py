from .linalg import as_matrix, jacobi_eigh, newton_schulz, polar_factor
from .rng import Rng

__all__ = ["Rng", "as_matrix", "jacobi_eigh", "newton_schulz", "polar_factor"]
