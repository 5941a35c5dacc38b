"""Per-tensor update rules: AdamW, Muon, SOAP.

Each ``*_step`` takes the tensor's state, the (possibly boosted) gradient
and the current value, and returns the new value. States are mutated in
place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError, NonFiniteError
from ..mathcore import jacobi_eigh, newton_schulz


def _finite(g, what="gradient"):
    if not np.all(np.isfinite(g)):
        raise NonFiniteError(f"non-finite {what} passed to optimizer step", op="optimizer")


@dataclass
class AdamWState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    denom_min: float = math.inf  # extremes of sqrt(v_hat) + delta from the last step
    denom_max: float = 0.0
    input_inf: float = 0.0  # max |moment input| on the last step

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape))


def adamw_step(state: AdamWState, g, lr, beta1, beta2, eps, weight_decay, theta):
    _finite(g)
    state.step += 1
    t = state.step
    state.m = beta1 * state.m + (1.0 - beta1) * g
    state.v = beta2 * state.v + (1.0 - beta2) * (g * g)
    m_hat = state.m / (1.0 - beta1**t)
    v_hat = state.v / (1.0 - beta2**t)
    denom = np.sqrt(v_hat) + eps
    state.denom_min = float(denom.min())
    state.denom_max = float(denom.max())
    state.input_inf = float(np.abs(g).max())
    return theta - lr * (m_hat / denom + weight_decay * theta)


@dataclass
class MuonState:
    M: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape))


def muon_scale(shape) -> float:
    m, n = shape
    return max(1.0, math.sqrt(n / m))


def muon_step(state: MuonState, g, lr, mu, weight_decay, ns_iters, theta):
    """Nesterov-style momentum, Newton-Schulz orthogonalization, shape scaling."""
    _finite(g)
    if g.ndim != 2:
        raise ValueError("muon_step needs a matrix; route vectors to adamw_step")
    state.step += 1
    state.M = mu * state.M + g
    O = mu * state.M + g
    X = newton_schulz(O, ns_iters)
    return theta - lr * (X * muon_scale(g.shape) + weight_decay * theta)


@dataclass
class SoapState:
    L: np.ndarray
    R: np.ndarray
    UL: np.ndarray
    UR: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    refreshes: int = 0
    eig_failed: bool = False  # last refresh kept the previous bases
    denom_min: float = math.inf
    denom_max: float = 0.0
    input_inf: float = 0.0

    @classmethod
    def init(cls, shape, eps):
        m, n = shape
        return cls(eps * np.eye(m), eps * np.eye(n), np.eye(m), np.eye(n), np.zeros(shape), np.zeros(shape))


def soap_step(state: SoapState, g, lr, beta1, beta2, beta_p, eps, freq, weight_decay, theta):
    """Adam in the eigenbasis of the Kronecker factors L ~ E[G G^T], R ~ E[G^T G].

    Bases are refreshed when the step counter is a multiple of ``freq``.
    Moments are kept in whatever basis is current (not re-rotated on refresh).
    """
    _finite(g)
    if g.ndim != 2:
        raise ValueError("soap_step needs a matrix; route vectors to adamw_step")
    state.step += 1
    t = state.step
    state.L = beta_p * state.L + (1.0 - beta_p) * (g @ g.T)
    state.R = beta_p * state.R + (1.0 - beta_p) * (g.T @ g)
    state.eig_failed = False
    if t % freq == 0:
        try:
            _, UL = jacobi_eigh(state.L)
            _, UR = jacobi_eigh(state.R)
        except ConvergenceError:
            state.eig_failed = True
        else:
            state.UL, state.UR = UL, UR
            state.refreshes += 1
    gt = state.UL.T @ g @ state.UR
    state.m = beta1 * state.m + (1.0 - beta1) * gt
    state.v = beta2 * state.v + (1.0 - beta2) * (gt * gt)
    m_hat = state.m / (1.0 - beta1**t)
    v_hat = state.v / (1.0 - beta2**t)
    denom = np.sqrt(v_hat) + eps
    state.denom_min = float(denom.min())
    state.denom_max = float(denom.max())
    state.input_inf = float(np.abs(gt).max())
    delta = state.UL @ (m_hat / denom) @ state.UR.T
    return theta - lr * (delta + weight_decay * theta)
