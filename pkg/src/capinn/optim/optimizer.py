"""Optimizer front end: base rule per tensor, optional CA transform, monitors."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import StateError
from .base import AdamWState, MuonState, SoapState, adamw_step, muon_step, soap_step
from .ca import CaConfig, CaState, ca_transform

BASES = ("adamw", "muon", "soap")
NAMES = BASES + tuple(f"ca-{b}" for b in BASES)
REL_SLACK = 1e-12


@dataclass
class StepInfo:
    kappa: float = 0.0
    alpha: float = 0.0
    grad_norm: float = 0.0
    boosted_norm: float = 0.0
    step_norm: float = 0.0
    flags: list = field(default_factory=list)


def _norm(d: dict) -> float:
    return math.sqrt(math.fsum(float(np.vdot(v, v)) for v in d.values()))


class LemmaMonitor:
    """Runtime checks of the gate range, boosted-gradient, preconditioner and
    displacement bounds, each against running maxima of observed gradients.
    """

    def __init__(self, c_alpha: float, alpha_base: float):
        self.c_alpha = c_alpha
        self.alpha_base = alpha_base
        self.g_run: dict[str, float] = {}  # per-tensor running max of |g|_2
        self.input_inf = 0.0  # running max |moment input|
        self.checks = 0
        self.violations: dict[str, int] = {"alpha": 0, "boosted": 0, "precond": 0, "displacement": 0}

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())

    def g_bound(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.g_run.values()))

    def observe_grad(self, g: dict):
        for k, v in g.items():
            n = float(np.linalg.norm(v))
            if n > self.g_run.get(k, 0.0):
                self.g_run[k] = n

    def _fail(self, name, flags):
        self.violations[name] += 1
        flags.append(f"violation:{name}")

    def check(self, alphas, boosted_norm, denoms, input_inf, step_norm, theta_norm, lr, wd, eps, flags):
        self.checks += 1
        hi = 2.0 * self.alpha_base
        if any(not (0.0 <= a <= hi) for a in alphas):
            self._fail("alpha", flags)
        G = self.g_bound()
        gain = 1.0 + 2.0 * self.c_alpha
        if boosted_norm > gain * G * (1.0 + REL_SLACK):
            self._fail("boosted", flags)
        if denoms is None:
            return
        self.input_inf = max(self.input_inf, input_inf)
        dmin, dmax = denoms
        # 1/(sqrt(v_hat)+delta) in [1/(G_inf+delta), 1/delta]
        if dmin < eps * (1.0 - REL_SLACK) or dmax > (self.input_inf + eps) * (1.0 + REL_SLACK):
            self._fail("precond", flags)
        bound = lr * gain * G / eps + lr * wd * theta_norm
        if step_norm > bound * (1.0 + REL_SLACK):
            self._fail("displacement", flags)


class Optimizer:
    """One of adamw, muon, soap, optionally wrapped by the CA transform.

    ``step(theta, g, lr)`` returns the new parameters (a fresh dict) and a
    :class:`StepInfo`. Muon and SOAP apply to 2-D tensors; other tensors use
    the AdamW rule with the same learning rate.
    """

    def __init__(
        self,
        base: str = "adamw",
        ca: CaConfig | None = None,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        beta_p: float = 0.95,
        precond_freq: int = 10,
        momentum: float = 0.95,
        ns_iters: int = 5,
    ):
        if base not in BASES:
            raise ValueError(f"unknown base optimizer '{base}' (known: {', '.join(BASES)})")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0 and 0.0 <= beta_p < 1.0 and 0.0 <= momentum < 1.0):
            raise ValueError("decay rates must lie in [0, 1)")
        if not eps > 0.0:
            raise ValueError("eps must be > 0")
        if precond_freq < 1 or ns_iters < 1:
            raise ValueError("precond_freq and ns_iters must be >= 1")
        self.base = base
        self.ca = ca
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = weight_decay
        self.beta_p, self.precond_freq = beta_p, precond_freq
        self.momentum, self.ns_iters = momentum, ns_iters
        self.states: dict = {}
        self.ca_state = CaState()
        self.monitor = LemmaMonitor(ca.c_alpha if ca else 0.0, ca.alpha_base if ca else 0.0)

    @property
    def name(self) -> str:
        return f"ca-{self.base}" if self.ca else self.base

    @property
    def beta_a(self) -> float | None:
        if self.ca is None:
            return None
        if self.ca.beta_a is not None:
            return self.ca.beta_a
        return self.momentum if self.base == "muon" else 0.9

    def hyper(self) -> dict:
        h = dict(
            base=self.base,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            weight_decay=self.weight_decay,
            beta_p=self.beta_p,
            precond_freq=self.precond_freq,
            momentum=self.momentum,
            ns_iters=self.ns_iters,
        )
        if self.ca:
            h["ca"] = dataclasses.asdict(self.ca)
        return h

    def _state_for(self, k, shape):
        st = self.states.get(k)
        if st is None:
            if self.base == "soap" and len(shape) == 2:
                st = SoapState.init(shape, self.eps)
            elif self.base == "muon" and len(shape) == 2:
                st = MuonState.zeros(shape)
            else:
                st = AdamWState.zeros(shape)
            self.states[k] = st
        return st

    def step(self, theta: dict, g: dict, lr: float):
        if not lr > 0.0:
            raise ValueError(f"learning rate must be > 0, got {lr}")
        info = StepInfo()
        info.grad_norm = _norm(g)
        if self.ca is not None:
            gt = ca_transform(self.ca_state, g, theta, self.ca, self.beta_a)
            info.kappa = self.ca_state.last_kappa
            info.alpha = self.ca_state.last_alpha
            if self.ca_state.guarded:
                info.flags.append("s_guard")
            info.boosted_norm = _norm(gt)
        else:
            gt = g
            info.boosted_norm = info.grad_norm
        new = type(theta)() if isinstance(theta, dict) else {}
        dmin, dmax, inp = math.inf, 0.0, 0.0
        adam_like = self.base != "muon"
        for k, th in theta.items():
            gk = gt[k]
            if np.shape(gk) != np.shape(th):
                raise StateError(f"gradient for '{k}' has shape {np.shape(gk)}, parameter {np.shape(th)}")
            st = self._state_for(k, th.shape)
            if isinstance(st, SoapState):
                new[k] = soap_step(
                    st, gk, lr, self.beta1, self.beta2, self.beta_p, self.eps, self.precond_freq, self.weight_decay, th
                )
                if st.eig_failed:
                    info.flags.append("eig_fail")
            elif isinstance(st, MuonState):
                new[k] = muon_step(st, gk, lr, self.momentum, self.weight_decay, self.ns_iters, th)
                continue
            else:
                new[k] = adamw_step(st, gk, lr, self.beta1, self.beta2, self.eps, self.weight_decay, th)
            dmin, dmax, inp = min(dmin, st.denom_min), max(dmax, st.denom_max), max(inp, st.input_inf)
        info.step_norm = _norm({k: new[k] - theta[k] for k in theta})
        self.monitor.observe_grad(g)
        alphas = list(self.ca_state.alphas.values()) if self.ca else [0.0]
        self.monitor.check(
            alphas,
            info.boosted_norm,
            (dmin, dmax) if adam_like else None,
            inp,
            info.step_norm,
            _norm(theta),
            lr,
            self.weight_decay,
            self.eps,
            info.flags,
        )
        return new, info

    # -- serialization -----------------------------------------------------
    def state_arrays(self) -> tuple[dict, dict]:
        """Flatten optimizer state to ``(arrays, meta)`` for the container format."""
        arrays, meta = {}, {"hyper": self.hyper(), "tensors": {}}
        for k, st in self.states.items():
            tm = {"kind": type(st).__name__}
            for f in dataclasses.fields(st):
                v = getattr(st, f.name)
                if isinstance(v, np.ndarray):
                    arrays[f"opt/{k}/{f.name}"] = v
                else:
                    tm[f.name] = v
            meta["tensors"][k] = tm
        cs = self.ca_state
        meta["ca_state"] = {
            "step": cs.step,
            "last_kappa": cs.last_kappa,
            "last_alpha": cs.last_alpha,
            "alphas": cs.alphas,
            "guarded": cs.guarded,
        }
        for part in ("prev_grad", "prev_params", "a"):
            d = getattr(cs, part)
            for k, v in (d or {}).items():
                arrays[f"ca/{part}/{k}"] = v
        return arrays, meta

    def load_state(self, arrays: dict, meta: dict) -> None:
        kinds = {"AdamWState": AdamWState, "MuonState": MuonState, "SoapState": SoapState}
        self.states = {}
        for k, tm in meta["tensors"].items():
            cls = kinds[tm["kind"]]
            kw = {}
            for f in dataclasses.fields(cls):
                key = f"opt/{k}/{f.name}"
                kw[f.name] = arrays[key].copy() if key in arrays else tm[f.name]
            self.states[k] = cls(**kw)
        cm = meta["ca_state"]
        cs = CaState(step=cm["step"], last_kappa=cm["last_kappa"], last_alpha=cm["last_alpha"], guarded=cm["guarded"])
        cs.alphas = dict(cm["alphas"])
        for part in ("prev_grad", "prev_params", "a"):
            pre = f"ca/{part}/"
            d = {key[len(pre) :]: v.copy() for key, v in arrays.items() if key.startswith(pre)}
            setattr(cs, part, d or None)
        self.ca_state = cs


def make_optimizer(name: str, **kw) -> Optimizer:
    """``name`` in adamw, muon, soap, ca-adamw, ca-muon, ca-soap.

    CA keywords (alpha_base, beta_a, s_guard, scope, gate) are collected
    into a :class:`CaConfig`; scope defaults to global for AdamW and
    per-tensor for Muon and SOAP, and Muon's EMA decay defaults to its
    momentum.
    """
    if name not in NAMES:
        raise ValueError(f"unknown optimizer '{name}' (known: {', '.join(NAMES)})")
    ca_keys = ("alpha_base", "beta_a", "s_guard", "scope", "gate")
    ca_kw = {k: kw.pop(k) for k in ca_keys if k in kw}
    base = name[3:] if name.startswith("ca-") else name
    ca = None
    if name.startswith("ca-"):
        ca_kw.setdefault("scope", "global" if base == "adamw" else "per-tensor")
        ca_kw.setdefault("beta_a", None if base == "muon" else 0.9)
        ca = CaConfig(**ca_kw)
    return Optimizer(base, ca, **kw)
