import numpy as np

from ..errors import DimensionError


def relative_l2(pred, exact) -> float:
    """sqrt(sum |pred - exact|^2) / sqrt(sum |exact|^2)."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    exact = np.asarray(exact, dtype=np.float64).ravel()
    if pred.shape != exact.shape or pred.size == 0:
        raise DimensionError("pred and exact must be non-empty and equally long")
    den = np.sqrt(np.sum(exact**2))
    if den == 0.0:
        raise ZeroDivisionError("relative L2 error undefined for a zero reference")
    return float(np.sqrt(np.sum((pred - exact) ** 2)) / den)


def linf(pred, exact) -> float:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    exact = np.asarray(exact, dtype=np.float64).ravel()
    if pred.shape != exact.shape or pred.size == 0:
        raise DimensionError("pred and exact must be non-empty and equally long")
    return float(np.max(np.abs(pred - exact)))
