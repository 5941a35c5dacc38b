"""Uniform i.i.d. collocation, boundary, initial and test point sets."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..mathcore import Rng


@dataclass(frozen=True)
class SamplePlan:
    n_f: int
    n_b: int = 0
    n_0: int = 0
    seed: int = 0
    n_test: int = 2000
    test_seed: int = 12345
    resample_each_iter: bool = False

    def __post_init__(self):
        if min(self.n_f, self.n_b, self.n_0, self.n_test) < 0:
            raise ValueError("point counts must be >= 0")


@dataclass
class Samples:
    interior: np.ndarray
    boundary: np.ndarray
    initial: np.ndarray
    test: np.ndarray


def _box(rng: Rng, bounds, n: int) -> np.ndarray:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + (hi - lo) * rng.uniform(size=(n, len(bounds)))


def sample_interior(problem, rng: Rng, n: int, t_range=None) -> np.ndarray:
    bounds = list(problem.bounds)
    if t_range is not None:
        bounds[-1] = tuple(t_range)
    return _box(rng, bounds, n)


def sample_boundary(problem, rng: Rng, n: int, t_range=None) -> np.ndarray:
    """Points on the spatial boundary of a box domain (all faces equally likely)."""
    ndim = len(problem.axes)
    if not problem.has_boundary_term or n == 0:
        return np.zeros((0, ndim))
    X = sample_interior(problem, rng.split(0), n, t_range)
    d = problem.spatial_dim
    face = rng.split(1).integers(0, 2 * d, size=n)
    axis, side = face // 2, face % 2
    rows = np.arange(n)
    lo = np.array([problem.bounds[i][0] for i in range(d)])
    hi = np.array([problem.bounds[i][1] for i in range(d)])
    X[rows, axis] = np.where(side == 0, lo[axis], hi[axis])
    return X


def sample_initial(problem, rng: Rng, n: int, t0=None) -> np.ndarray:
    X = _box(rng, problem.bounds, n)
    X[:, -1] = problem.horizon[0] if t0 is None else t0
    return X


def sample_domain(problem, plan: SamplePlan, t_range=None, stream=()) -> Samples:
    """Draw all point sets. The test set uses its own seed so it is shared by every run.

    ``stream`` selects an independent child stream of ``plan.seed`` (e.g.
    ``(run_seed, window)``); the empty path is the root stream.
    """
    rng = Rng(plan.seed, tuple(stream))
    t0 = None if t_range is None else t_range[0]
    return Samples(
        interior=sample_interior(problem, rng.split(0), plan.n_f, t_range),
        boundary=sample_boundary(problem, rng.split(1), plan.n_b, t_range),
        initial=sample_initial(problem, rng.split(2), plan.n_0, t0),
        test=sample_interior(problem, Rng(plan.test_seed).split(3), plan.n_test),
    )


def write_points_csv(path, problem, X: np.ndarray) -> None:
    """One point per row: coordinates, then exact-solution values when known."""
    exact = problem.exact(X) if problem.has_exact and len(X) else None
    header = list(problem.axes)
    if exact is not None:
        header += [f"{c}_exact" for c in problem.outputs]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(X.shape[0]):
            row = [repr(float(v)) for v in X[i]]
            if exact is not None:
                row += [repr(float(e[i])) for e in exact]
            w.writerow(row)
