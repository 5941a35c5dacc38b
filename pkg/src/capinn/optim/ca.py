"""Curvature-aware gradient transform.

The raw gradient is replaced by ``g + alpha * a``, where ``a`` is an EMA of
consecutive gradient differences and ``alpha`` is a gate driven by the
secant curvature ``kappa = <s, y> / |s|^2`` along the latest displacement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import StateError

SCOPES = ("global", "per-tensor")
GATES = ("tanh", "fixed")


@dataclass
class CaConfig:
    """``beta_a=None`` lets the optimizer pick its default decay."""

    alpha_base: float = 0.1
    beta_a: float | None = 0.9
    s_guard: float = 1e-12
    scope: str = "global"
    gate: str = "tanh"  # "fixed" is an ablation: alpha == alpha_base always

    def __post_init__(self):
        if not self.alpha_base >= 0.0:
            raise ValueError(f"alpha_base must be >= 0, got {self.alpha_base}")
        if self.beta_a is not None and not 0.0 <= self.beta_a < 1.0:
            raise ValueError(f"beta_a must be in [0, 1), got {self.beta_a}")
        if not self.s_guard > 0.0:
            raise ValueError("s_guard must be > 0")
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")
        if self.gate not in GATES:
            raise ValueError(f"gate must be one of {GATES}")

    @property
    def c_alpha(self) -> float:
        return 2.0 * self.alpha_base


@dataclass
class CaState:
    prev_grad: dict | None = None
    prev_params: dict | None = None
    a: dict | None = None
    step: int = 0
    last_kappa: float = 0.0
    last_alpha: float = 0.0
    alphas: dict = field(default_factory=dict)  # per tensor (per-tensor scope)
    guarded: bool = False  # |s| fell below s_guard on the last step


def _dot(u, v) -> float:
    if isinstance(u, dict):
        return math.fsum(float(np.vdot(u[k], v[k])) for k in u)
    return float(np.vdot(u, v))


def curvature_gate(s, y, cfg: CaConfig) -> tuple[float, float]:
    """Secant curvature and gate value for displacement ``s``, difference ``y``.

    ``s`` and ``y`` are arrays of equal shape or dicts of such arrays (the
    inner product then runs over all entries).
    """
    if isinstance(s, dict):
        if s.keys() != y.keys() or any(np.shape(s[k]) != np.shape(y[k]) for k in s):
            raise StateError("s and y have different layouts")
    elif np.shape(s) != np.shape(y):
        raise StateError(f"s and y shapes differ: {np.shape(s)} vs {np.shape(y)}")
    ss = _dot(s, s)
    kappa = _dot(s, y) / max(ss, cfg.s_guard**2)
    if cfg.gate == "fixed":
        return kappa, cfg.alpha_base
    return kappa, cfg.alpha_base * (1.0 + math.tanh(-kappa))


def _check_layout(ref: dict, new: dict, what: str):
    if ref.keys() != new.keys():
        raise StateError(f"{what}: tensor names changed ({sorted(ref)} vs {sorted(new)})")
    for k in ref:
        if ref[k].shape != np.shape(new[k]):
            raise StateError(f"{what}: tensor '{k}' shape {np.shape(new[k])} != stored {ref[k].shape}")


def ca_transform(state: CaState, g: dict, theta: dict, cfg: CaConfig, beta_a: float | None = None) -> dict:
    """Boosted gradient for the current step; advances ``state``.

    ``theta`` is the iterate at which ``g`` was evaluated. With
    ``alpha_base == 0`` the returned dict holds the very same arrays as ``g``.
    """
    ba = cfg.beta_a if beta_a is None else beta_a
    if ba is None:
        raise ValueError("no EMA decay given")
    state.step += 1
    if state.step == 1:
        state.a = {k: np.zeros_like(v) for k, v in g.items()}
        state.prev_grad = {k: np.array(v, dtype=np.float64) for k, v in g.items()}
        state.prev_params = {k: np.array(v, dtype=np.float64) for k, v in theta.items()}
        state.last_kappa = 0.0
        state.last_alpha = 0.0
        state.alphas = {k: 0.0 for k in g}
        state.guarded = False
        return dict(g)
    _check_layout(state.prev_grad, g, "gradient")
    _check_layout(state.prev_params, theta, "parameters")
    y = {k: g[k] - state.prev_grad[k] for k in g}
    s = {k: theta[k] - state.prev_params[k] for k in g}
    for k in g:
        state.a[k] = ba * state.a[k] + (1.0 - ba) * y[k]
    ss = _dot(s, s)
    state.guarded = ss < cfg.s_guard**2
    kappa, alpha = curvature_gate(s, y, cfg)
    state.last_kappa = kappa
    if cfg.scope == "global":
        state.alphas = {k: alpha for k in g}
        state.last_alpha = alpha
    else:
        state.alphas = {k: curvature_gate(s[k], y[k], cfg)[1] for k in g}
        state.last_alpha = float(np.mean(list(state.alphas.values())))
    state.prev_grad = {k: np.array(v, dtype=np.float64) for k, v in g.items()}
    state.prev_params = {k: np.array(v, dtype=np.float64) for k, v in theta.items()}
    if cfg.alpha_base == 0.0:
        return dict(g)
    return {k: g[k] + state.alphas[k] * state.a[k] for k in g}
