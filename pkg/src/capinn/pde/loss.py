"""Composite PINN objective: weighted mean-squared residual, boundary and initial terms."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..network import forward
from .derivatives import collect


def _msq(residuals, n):
    total = None
    for r in residuals:
        sq = (r * r).sum()
        total = sq if total is None else total + sq
    return total * (1.0 / n)


def pinn_loss_fn(fn, problem, samples, ic_targets=None):
    """Loss for an arbitrary jet-evaluable ``fn(xs) -> outputs``.

    Returns ``(total, {"f": L_F, "b": L_B, "i": L_I})``. Components that are
    inactive (zero weight or no such term for the problem) are omitted.
    ``ic_targets`` overrides the problem's initial data (time marching).
    """
    w = problem.weights
    comps = {}
    if w.get("f", 0.0) > 0.0:
        X = samples.interior
        if len(X) == 0:
            raise ConfigError("residual term is active but N_f = 0")
        D = collect(fn, X, problem.requests())
        comps["f"] = _msq(problem.residual(X, D), len(X))
    if problem.has_boundary_term and w.get("b", 0.0) > 0.0:
        X = samples.boundary
        if len(X) == 0:
            raise ConfigError("boundary term is active but N_b = 0")
        target = problem.boundary_target(X)
        comps["b"] = _msq([u - g for u, g in zip(fn([X[:, i] for i in range(X.shape[1])]), target)], len(X))
    if w.get("i", 0.0) > 0.0:
        X = samples.initial
        if len(X) == 0:
            raise ConfigError("initial term is active but N_0 = 0")
        target = problem.initial_target(X) if ic_targets is None else ic_targets
        comps["i"] = _msq([u - h for u, h in zip(fn([X[:, i] for i in range(X.shape[1])]), target)], len(X))
    if not comps:
        raise ConfigError("all loss weights are zero")
    total = None
    for k, v in comps.items():
        term = v * w[k]
        total = term if total is None else total + term
    return total, comps


def pinn_loss(spec, theta, problem, samples, ic_targets=None):
    return pinn_loss_fn(lambda xs: forward(spec, theta, xs), problem, samples, ic_targets)


def predict(spec, theta, X: np.ndarray) -> list[np.ndarray]:
    """Network outputs at points ``X`` as plain arrays."""
    return [np.asarray(y, dtype=np.float64) for y in forward(spec, theta, np.asarray(X, dtype=np.float64))]
