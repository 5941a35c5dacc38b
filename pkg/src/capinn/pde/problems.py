"""Benchmark problem definitions.

Inputs are ordered (spatial axes..., t). Residual operators receive a
derivative map ``D`` from :func:`capinn.pde.derivatives.collect`, keyed by
multi-indices over those axes, and the collocation coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import cos, exp, sin
from ..network import FourierEmbedding


@dataclass
class PdeProblem:
    name: str
    axes: tuple[str, ...]
    outputs: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    weights: dict = field(default_factory=lambda: {"f": 1.0, "b": 1.0, "i": 1.0})
    periodic: dict = field(default_factory=dict)  # axis index -> period (hard constraint)
    fourier_modes: int = 10

    @property
    def spatial_dim(self) -> int:
        return len(self.axes) - 1

    @property
    def time_axis(self) -> int:
        return len(self.axes) - 1

    @property
    def horizon(self) -> tuple[float, float]:
        return self.bounds[-1]

    @property
    def has_boundary_term(self) -> bool:
        return not self.periodic

    @property
    def has_exact(self) -> bool:
        return type(self).exact is not PdeProblem.exact

    def embedding(self) -> FourierEmbedding | None:
        if not self.periodic:
            return None
        axes = tuple(sorted(self.periodic))
        return FourierEmbedding(axes, tuple(self.periodic[a] for a in axes), self.fourier_modes)

    def d(self, **orders) -> tuple[int, ...]:
        """Multi-index helper: ``self.d(x=2)`` -> (2, 0)."""
        idx = [0] * len(self.axes)
        for k, v in orders.items():
            idx[self.axes.index(k)] = v
        return tuple(idx)

    # -- operators (overridden per problem) ------------------------------
    def requests(self) -> list[tuple[int, ...]]:
        raise NotImplementedError

    def residual(self, X: np.ndarray, D: dict) -> list:
        raise NotImplementedError

    def boundary_target(self, X: np.ndarray) -> list:
        """Dirichlet data on the spatial boundary."""
        return self.exact(X)

    def initial_target(self, X: np.ndarray) -> list:
        raise NotImplementedError

    def exact(self, X: np.ndarray) -> list:
        raise NotImplementedError("no closed-form solution")

    def exact_jet(self, xs: list) -> list:
        """Exact solution written with jet-generic primitives (oracle network)."""
        raise NotImplementedError("no closed-form solution")

    @property
    def has_reference(self) -> bool:
        return self.has_exact or type(self).reference is not PdeProblem.reference

    def reference(self, X: np.ndarray) -> list:
        """Solution used for error metrics: exact when known, else numerical."""
        return self.exact(X)


class Heat(PdeProblem):
    """u_t - Laplace(u) = f on [-1,1]^d x [0,1], u = cos(mean(x)) exp(-t)."""

    def __init__(self, d: int = 10, weights=None):
        super().__init__(
            name=f"heat{d}d",
            axes=tuple(f"x{i + 1}" for i in range(d)) + ("t",),
            outputs=("u",),
            bounds=((-1.0, 1.0),) * d + ((0.0, 1.0),),
            weights=weights or {"f": 1.0, "b": 10.0, "i": 10.0},
        )
        self.dim = d

    def requests(self):
        n = self.dim
        reqs = [self.d(t=1)]
        for i in range(n):
            idx = [0] * (n + 1)
            idx[i] = 2
            reqs.append(tuple(idx))
        return reqs

    def source(self, X):
        return self.exact(X)[0] * (1.0 / self.dim - 1.0)

    def residual(self, X, D):
        n = self.dim
        lap = None
        for i in range(n):
            idx = [0] * (n + 1)
            idx[i] = 2
            term = D[tuple(idx)][0]
            lap = term if lap is None else lap + term
        return [D[self.d(t=1)][0] - lap - self.source(X)]

    def initial_target(self, X):
        return [np.cos(X[:, : self.dim].mean(axis=1))]

    def exact(self, X):
        return [np.cos(X[:, : self.dim].mean(axis=1)) * np.exp(-X[:, -1])]

    def exact_jet(self, xs):
        s = xs[0]
        for x in xs[1 : self.dim]:
            s = s + x
        return [cos(s * (1.0 / self.dim)) * exp(-xs[-1])]


class GrayScott(PdeProblem):
    """1-D Gray-Scott on [-50,50] x [0,20] with periodic x (hard constraint)."""

    eps1 = 1.0
    eps2 = 0.01
    b = 0.02
    k = 0.0562

    def __init__(self, t_end: float = 20.0, weights=None, modes: int = 10):
        super().__init__(
            name="gray_scott",
            axes=("x", "t"),
            outputs=("u", "v"),
            bounds=((-50.0, 50.0), (0.0, float(t_end))),
            weights=weights or {"f": 1.0, "b": 0.0, "i": 100.0},
            periodic={0: 100.0},
            fourier_modes=modes,
        )

    def requests(self):
        return [self.d(t=1), self.d(x=2)]

    def residual(self, X, D):
        u, v = D[self.d()]
        ut, vt = D[self.d(t=1)]
        uxx, vxx = D[self.d(x=2)]
        uvv = u * (v * v)
        ru = ut - self.eps1 * uxx - self.b * (1.0 - u) + uvv
        rv = vt - self.eps2 * vxx + (self.b + self.k) * v - uvv
        return [ru, rv]

    @staticmethod
    def initial_profile(x):
        s4 = np.sin(np.pi * (x - 50.0) / 100.0) ** 4
        return [1.0 - s4 / 2.0, s4 / 4.0]

    def initial_target(self, X):
        return self.initial_profile(X[:, 0])

    def reference(self, X):
        from .reference import gray_scott_reference

        return gray_scott_reference(self.horizon[1], self.eps1, self.eps2, self.b, self.k)(X)


class BelousovZhabotinsky(PdeProblem):
    """Three-species BZ system on [-1,1] x [0,3], periodic x."""

    eps1 = 1e-5
    eps2 = 2e-5

    def __init__(self, t_end: float = 3.0, weights=None, modes: int = 10):
        super().__init__(
            name="bz",
            axes=("x", "t"),
            outputs=("u", "v", "w"),
            bounds=((-1.0, 1.0), (0.0, float(t_end))),
            weights=weights or {"f": 1.0, "b": 0.0, "i": 100.0},
            periodic={0: 2.0},
            fourier_modes=modes,
        )

    def requests(self):
        return [self.d(t=1), self.d(x=2)]

    def residual(self, X, D):
        u, v, w = D[self.d()]
        ut, vt, wt = D[self.d(t=1)]
        uxx, vxx, wxx = D[self.d(x=2)]
        uv = u * v
        ru = ut - self.eps1 * uxx + u + v - uv - u * u
        rv = vt - self.eps2 * vxx + w - v - uv
        rw = wt - self.eps1 * wxx + u - w
        return [ru, rv, rw]

    @staticmethod
    def initial_profile(x):
        return [np.exp(-100.0 * (x + 0.5) ** 2), np.exp(-100.0 * x**2), np.exp(-100.0 * (x - 0.5) ** 2)]

    def initial_target(self, X):
        return self.initial_profile(X[:, 0])

    def reference(self, X):
        from .reference import bz_reference

        return bz_reference(self.horizon[1], self.eps1, self.eps2)(X)


class KuramotoSivashinsky2D(PdeProblem):
    """2-D KS system on [0,2]^2 x [0,1] with manufactured sources."""

    def __init__(self, lam: float = 0.01, weights=None):
        super().__init__(
            name="ks2d",
            axes=("x", "y", "t"),
            outputs=("u", "v"),
            bounds=((0.0, 2.0), (0.0, 2.0), (0.0, 1.0)),
            weights=weights or {"f": 1.0, "b": 20.0, "i": 20.0},
        )
        self.lam = lam

    def requests(self):
        d = self.d
        return [d(t=1), d(x=1), d(y=1), d(x=2), d(y=2), d(x=4), d(y=4), d(x=2, y=2)]

    def _decay(self, t):
        return np.exp(-(math.pi**2) * self.lam * t / 4.0)

    def sources(self, X):
        x, y, t = X[:, 0], X[:, 1], X[:, 2]
        u, v = self.exact(X)
        c = 4.0 * math.pi**4 - 9.0 * math.pi**2 * self.lam / 4.0
        e2 = self._decay(t) ** 2
        f1 = c * u - 0.5 * math.pi * np.sin(2.0 * math.pi * x) * e2
        f2 = c * v - 0.5 * math.pi * np.sin(2.0 * math.pi * y) * e2
        return [f1, f2]

    def residual(self, X, D):
        d = self.d
        u, v = D[d()]
        f1, f2 = self.sources(X)
        res = []
        for j, (w, f) in enumerate(((u, f1), (v, f2))):
            adv = u * D[d(x=1)][j] + v * D[d(y=1)][j]
            lap = D[d(x=2)][j] + D[d(y=2)][j]
            bih = D[d(x=4)][j] + 2.0 * D[d(x=2, y=2)][j] + D[d(y=4)][j]
            res.append(D[d(t=1)][j] + adv + self.lam * lap + bih - f)
        return res

    def initial_target(self, X):
        X0 = X.copy()
        X0[:, -1] = 0.0
        return self.exact(X0)

    def exact(self, X):
        x, y, t = X[:, 0], X[:, 1], X[:, 2]
        e = self._decay(t)
        return [-np.cos(np.pi * x) * np.sin(np.pi * y) * e, np.sin(np.pi * x) * np.cos(np.pi * y) * e]

    def exact_jet(self, xs):
        x, y, t = xs
        e = exp(t * (-(math.pi**2) * self.lam / 4.0))
        px, py = x * math.pi, y * math.pi
        return [-(cos(px) * sin(py)) * e, (sin(px) * cos(py)) * e]


class Burgers(PdeProblem):
    """Viscous Burgers on [-1,1] x [0,1]; loss = L_I + L_B + lam * L_F."""

    def __init__(self, nu: float = 0.01 / math.pi, lam: float = 1.0):
        super().__init__(
            name="burgers",
            axes=("x", "t"),
            outputs=("u",),
            bounds=((-1.0, 1.0), (0.0, 1.0)),
            weights={"f": float(lam), "b": 1.0, "i": 1.0},
        )
        self.nu = nu

    def requests(self):
        return [self.d(t=1), self.d(x=1), self.d(x=2)]

    def residual(self, X, D):
        (u,) = D[self.d()]
        return [D[self.d(t=1)][0] + u * D[self.d(x=1)][0] - self.nu * D[self.d(x=2)][0]]

    def boundary_target(self, X):
        return [np.zeros(X.shape[0])]

    def initial_target(self, X):
        return [-np.sin(np.pi * X[:, 0])]

    def reference(self, X, nodes: int = 256):
        """Cole-Hopf solution by Gauss-Hermite quadrature over the heat kernel."""
        x, t = X[:, 0], X[:, 1]
        z, w = np.polynomial.hermite.hermgauss(nodes)
        u = -np.sin(np.pi * x)
        pos = t > 0
        if np.any(pos):
            xp, tp = x[pos, None], t[pos, None]
            eta = np.sqrt(4.0 * self.nu * tp) * z[None, :]
            y = xp - eta
            a = -np.cos(np.pi * y) / (2.0 * np.pi * self.nu)
            e = w[None, :] * np.exp(a - a.max(axis=1, keepdims=True))
            u[pos] = -np.sum(np.sin(np.pi * y) * e, axis=1) / np.sum(e, axis=1)
        return [u]


def make_problem(name: str, **kw) -> PdeProblem:
    table = {
        "heat": Heat,
        "gray_scott": GrayScott,
        "bz": BelousovZhabotinsky,
        "ks2d": KuramotoSivashinsky2D,
        "burgers": Burgers,
    }
    if name not in table:
        raise ValueError(f"unknown problem '{name}' (known: {', '.join(sorted(table))})")
    return table[name](**kw)
