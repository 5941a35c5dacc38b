"""2-D random-direction projection of a loss landscape."""
from __future__ import annotations

import math

import numpy as np

from ..mathcore import Rng


def random_directions(theta_center: dict, seed: int, normalize: str = "filter"):
    """Two Gaussian directions shaped like ``theta_center``.

    With ``normalize="filter"`` each tensor of each direction is rescaled to
    the norm of the matching tensor of ``theta_center`` (zero tensors give
    zero directions); ``"none"`` keeps the raw Gaussian draws.
    """
    if normalize not in ("filter", "none"):
        raise ValueError("normalize must be 'filter' or 'none'")
    rng = Rng(seed)
    dirs = []
    for j in range(2):
        r = rng.split(j)
        d = {}
        for i, (k, v) in enumerate(theta_center.items()):
            z = r.split(i).normal(size=np.shape(v))
            if normalize == "filter":
                nz, nv = np.linalg.norm(z), np.linalg.norm(v)
                z = z * (nv / nz) if nz > 0.0 else z * 0.0
            d[k] = z
        dirs.append(d)
    return dirs


def landscape_project(theta_center: dict, loss_fn, n: int, extent: float, seed: int, normalize: str = "filter", directions=None):
    """Grid of log10 loss over ``theta_center + a d1 + b d2``.

    ``a`` indexes rows and ``b`` columns, both ``linspace(-extent, extent, n)``.
    Nodes where the loss is not a finite positive number hold NaN.
    """
    if n < 2:
        raise ValueError("grid size must be >= 2")
    if not extent > 0.0:
        raise ValueError("extent must be > 0")
    d1, d2 = directions if directions is not None else random_directions(theta_center, seed, normalize)
    ticks = np.linspace(-extent, extent, n)
    grid = np.full((n, n), np.nan)
    for i, a in enumerate(ticks):
        for j, b in enumerate(ticks):
            th = {k: v + a * d1[k] + b * d2[k] for k, v in theta_center.items()}
            try:
                val = float(loss_fn(th))
            except (FloatingPointError, ArithmeticError):
                continue
            if math.isfinite(val) and val > 0.0:
                grid[i, j] = math.log10(val)
    return grid


def write_grid(path, grid: np.ndarray, extent: float) -> None:
    n = grid.shape[0]
    with open(path, "w") as fh:
        fh.write(f"{n} {extent!r}\n")
        for row in grid:
            fh.write(" ".join("nan" if not math.isfinite(v) else repr(float(v)) for v in row) + "\n")


def read_grid(path):
    with open(path) as fh:
        n, extent = fh.readline().split()
        grid = np.array([[float(v) for v in line.split()] for line in fh if line.strip()])
    if grid.shape != (int(n), int(n)):
        raise ValueError(f"{path}: expected {n}x{n} grid, got {grid.shape}")
    return grid, float(extent)
