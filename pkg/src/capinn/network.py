"""Tanh MLP with optional Fourier-feature embedding of periodic axes."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Jet, cos, jet_stack, sin, tanh
from .errors import DimensionError
from .io import load_container, save_container
from .mathcore import Rng


@dataclass(frozen=True)
class FourierEmbedding:
    """Map each listed input axis x to [cos(w x), sin(w x), ..., cos(m w x), sin(m w x)], w = 2 pi / period."""

    axes: tuple[int, ...]
    periods: tuple[float, ...]
    modes: int = 10

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(int(a) for a in self.axes))
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
        if len(self.axes) != len(self.periods):
            raise ValueError("one period per embedded axis")
        if self.modes < 1 or any(p <= 0 for p in self.periods):
            raise ValueError("modes must be >= 1 and periods positive")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_width: int
    hidden_depth: int
    output_dim: int = 1
    embedding: FourierEmbedding | None = None
    activation: str = field(default="tanh")

    def __post_init__(self):
        if self.hidden_depth < 1 or self.hidden_width < 1:
            raise ValueError("depth and width must be >= 1")
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input and output dims must be >= 1")
        if self.activation != "tanh":
            raise ValueError("only tanh activation is supported")
        if self.embedding is not None and any(not 0 <= a < self.input_dim for a in self.embedding.axes):
            raise ValueError("embedded axis out of range")

    @property
    def feature_dim(self) -> int:
        if self.embedding is None:
            return self.input_dim
        k = len(self.embedding.axes)
        return self.input_dim - k + 2 * self.embedding.modes * k

    def layer_sizes(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) for every affine layer."""
        dims = [self.feature_dim] + [self.hidden_width] * self.hidden_depth + [self.output_dim]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        out = []
        for i, (fo, fi) in enumerate(self.layer_sizes()):
            out.append((f"W{i}", (fo, fi)))
            out.append((f"b{i}", (fo,)))
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        d = dict(d)
        emb = d.get("embedding")
        if emb is not None:
            d["embedding"] = FourierEmbedding(**emb)
        return cls(**d)


class ParamSet(dict):
    """Named parameter tensors in layout order, with a flat-vector view."""

    def flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(v) for v in self.values()]) if self else np.zeros(0)

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(k, tuple(np.shape(v))) for k, v in self.items()]

    @classmethod
    def from_flat(cls, layout, vec) -> "ParamSet":
        vec = np.asarray(vec, dtype=np.float64)
        total = sum(int(np.prod(s, dtype=np.int64)) for _, s in layout)
        if vec.shape != (total,):
            raise DimensionError(f"flat vector has {vec.size} entries, layout needs {total}")
        out = cls()
        i = 0
        for name, shape in layout:
            n = int(np.prod(shape, dtype=np.int64))
            out[name] = vec[i : i + n].reshape(shape).copy()
            i += n
        return out

    def copy(self) -> "ParamSet":
        return ParamSet((k, np.array(v, copy=True)) for k, v in self.items())

    def map(self, fn) -> "ParamSet":
        return ParamSet((k, fn(v)) for k, v in self.items())


def init_glorot(spec: MlpSpec, rng: Rng) -> ParamSet:
    """Glorot-uniform weights, zero biases."""
    theta = ParamSet()
    for i, (fo, fi) in enumerate(spec.layer_sizes()):
        lim = math.sqrt(6.0 / (fi + fo))
        theta[f"W{i}"] = rng.split(i).uniform(-lim, lim, size=(fo, fi))
        theta[f"b{i}"] = np.zeros(fo)
    return theta


def embed(spec: MlpSpec, x: list) -> list:
    """Feature list for the first layer (works on floats, arrays, Vars, Jets)."""
    emb = spec.embedding
    if emb is None:
        return list(x)
    periods = dict(zip(emb.axes, emb.periods))
    feats = []
    for i, xi in enumerate(x):
        if i not in periods:
            feats.append(xi)
            continue
        w = 2.0 * math.pi / periods[i]
        for k in range(1, emb.modes + 1):
            arg = (k * w) * xi
            feats.append(cos(arg))
            feats.append(sin(arg))
    return feats


def forward(spec: MlpSpec, theta, x) -> list:
    """Network output components at ``x``.

    ``x`` is either a sequence of ``input_dim`` coordinates (each a float,
    array of points, or Jet) or a 2-D array of shape (points, input_dim).
    Returns a list of ``output_dim`` values of the same kind.
    """
    if isinstance(x, np.ndarray) and x.ndim == 2:
        if x.shape[1] != spec.input_dim:
            raise DimensionError(f"expected {spec.input_dim} input columns, got {x.shape[1]}")
        x = [x[:, i] for i in range(x.shape[1])]
    if len(x) != spec.input_dim:
        raise DimensionError(f"expected {spec.input_dim} inputs, got {len(x)}")
    h = jet_stack(embed(spec, x), axis=-1)
    depth = spec.hidden_depth
    for i in range(depth):
        h = tanh(h @ theta[f"W{i}"].T + theta[f"b{i}"])
    y = h @ theta[f"W{depth}"].T + theta[f"b{depth}"]
    return [y[..., j] for j in range(spec.output_dim)]


def save_params(path, spec: MlpSpec, theta: ParamSet, extra: dict | None = None, meta: dict | None = None) -> None:
    """Write parameters (and optional extra arrays, e.g. optimizer state) to a container."""
    arrays = {f"param/{k}": v for k, v in theta.items()}
    for k, v in (extra or {}).items():
        arrays[f"state/{k}"] = v
    m = {"spec": spec.to_dict(), "layout": [[k, list(s)] for k, s in theta.layout()]}
    m.update(meta or {})
    save_container(path, arrays, m)


def load_params(path):
    """Inverse of ``save_params``: returns ``(spec, theta, extra, meta)``."""
    arrays, meta = load_container(path)
    spec = MlpSpec.from_dict(meta["spec"])
    theta = ParamSet((k[len("param/") :], v) for k, v in arrays.items() if k.startswith("param/"))
    extra = {k[len("state/") :]: v for k, v in arrays.items() if k.startswith("state/")}
    return spec, theta, extra, meta
