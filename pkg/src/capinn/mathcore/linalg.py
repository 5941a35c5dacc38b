"""Dense symmetric eigendecomposition and Newton-Schulz orthogonalization.

Matrices are 2-D float64 numpy arrays (C order).
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import ConvergenceError, DimensionError, NonFiniteError


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Validate external input as a finite 2-D float64 matrix."""
    m = np.array(x, dtype=np.float64, order="C", copy=True)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return m


def jacobi_eigh(S, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decompose a symmetric matrix with cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with eigenvalues sorted descending and the
    matching orthonormal eigenvectors as columns of ``V``. Sweeps stop once
    the off-diagonal Frobenius norm falls to ``tol * ||S||_F``, which bounds
    ``||S V - V diag(w)||_F`` by the same quantity.
    """
    a = as_matrix(S, "S")
    n, m = a.shape
    if n != m:
        raise DimensionError(f"jacobi_eigh needs a square matrix, got {a.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = float(np.linalg.norm(a))
    if np.any(np.abs(a - a.T) > 1e-12 * max(scale, np.finfo(float).tiny)):
        raise DimensionError("jacobi_eigh needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if scale == 0.0:
        return np.zeros(n), v
    sweeps = kernels.jacobi_sweeps(a, v, tol * scale, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], np.ascontiguousarray(v[:, order])


def newton_schulz(M, iters: int = 5) -> np.ndarray:
    """Approximate the orthogonal polar factor of ``M``.

    Starts from ``X = M / ||M||_F`` and applies ``X <- 1.5 X - 0.5 (X X^T) X``
    ``iters`` times. The Gram product is formed on the smaller side, which is
    the same iteration written as ``X (X^T X)``. A zero matrix maps to zero.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"newton_schulz needs a matrix, got shape {M.shape}")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    norm = float(np.linalg.norm(M))
    if norm == 0.0:
        return np.zeros_like(M)
    X = M / norm
    wide = X.shape[0] <= X.shape[1]
    for _ in range(iters):
        if wide:
            X = 1.5 * X - 0.5 * ((X @ X.T) @ X)
        else:
            X = 1.5 * X - 0.5 * (X @ (X.T @ X))
    return X


def polar_factor(M) -> np.ndarray:
    """Exact orthogonal polar factor ``U V^T`` from the SVD (reference path)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64), full_matrices=False)
    return U @ Vt
