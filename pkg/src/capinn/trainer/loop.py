"""Training loop and time-marching driver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..autodiff import grad
from ..errors import DivergenceError, NonFiniteError
from ..mathcore import Rng
from ..network import MlpSpec, ParamSet, init_glorot, save_params
from ..optim import CaConfig, curvature_gate, make_optimizer
from ..pde import linf, pinn_loss, predict, relative_l2, sample_domain
from .diagnostics import SecantTracker
from .metrics import MetricsRow
from .schedule import LrSchedule

DIVERGENCE_LOSS = 1e12


@dataclass
class TrainConfig:
    iterations: int = 1000  # per window
    windows: int = 1
    lr: float = 1e-3
    warmup_frac: float = 0.05
    floor_frac: float = 0.01
    weight_decay: float = 0.0
    optimizer: str = "adamw"
    opt_params: dict = field(default_factory=dict)  # base and CA hyperparameters
    seeds: tuple = (0,)
    eval_every: int = 100
    record_kappa: bool = True
    record_R: bool = False

    def __post_init__(self):
        if self.iterations < 1 or self.windows < 1:
            raise ValueError("iterations and windows must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("at least one seed is required")

    @property
    def schedule(self) -> LrSchedule:
        return LrSchedule(self.lr, self.warmup_frac, self.floor_frac)

    def make_optimizer(self):
        return make_optimizer(self.optimizer, weight_decay=self.weight_decay, **self.opt_params)


@dataclass
class LoopResult:
    theta: ParamSet
    history: list
    optimizer: object
    r_over_one: int = 0  # iterations with a reliable R > 1
    r_count: int = 0


def _flat(d: dict) -> np.ndarray:
    return np.concatenate([np.ravel(v) for v in d.values()])


def run_loop(objective, theta0, config: TrainConfig, *, window=0, iter_offset=0, writer=None, evaluate=None):
    """Optimize ``objective(theta) -> (loss, grads, components)`` for one window.

    ``evaluate(theta) -> (rel_l2, linf)`` dicts is called after the first
    step, every ``eval_every`` iterations and at the last one. Metrics rows are written
    one iteration late so R (which needs the next gradient) can be filled.
    """
    opt = config.make_optimizer()
    sched = config.schedule
    T = config.iterations
    guard = CaConfig(alpha_base=0.0, s_guard=opt.ca.s_guard if opt.ca else 1e-12)
    tracker = SecantTracker() if config.record_R else None
    theta = ParamSet(theta0) if not isinstance(theta0, ParamSet) else theta0
    history = []
    pending = None
    prev = None
    res = LoopResult(theta, history, opt)

    def emit(row):
        history.append(row)
        if writer is not None:
            writer.write(row)

    def diverge(k, msg):
        if pending is not None:
            emit(pending)
        if writer is not None:
            writer.flush()
        raise DivergenceError(msg, iteration=iter_offset + k, window=window)

    for k in range(1, T + 1):
        try:
            loss, g, comps = objective(theta)
        except NonFiniteError as e:
            diverge(k, f"non-finite loss or gradient at iteration {iter_offset + k}: {e}")
        if not math.isfinite(loss) or loss > DIVERGENCE_LOSS:
            diverge(k, f"loss {loss!r} at iteration {iter_offset + k} exceeds divergence threshold")
        row = MetricsRow(iter=iter_offset + k, window=window, loss=loss)
        row.loss_f, row.loss_b, row.loss_i = comps.get("f"), comps.get("b"), comps.get("i")
        tf, gf = _flat(theta), _flat(g)
        if config.record_kappa and prev is not None:
            s, y = tf - prev[0], gf - prev[1]
            row.kappa = curvature_gate(s, y, guard)[0]
        if tracker is not None:
            r = tracker.push(tf, gf)
            if r is not None and pending is not None:
                pending.R = r[0]
                if not r[1]:
                    pending.flags.append("R_unreliable")
                else:
                    res.r_count += 1
                    res.r_over_one += r[0] > 1.0
        prev = (tf, gf)
        lr = sched(k, T)
        try:
            theta, info = opt.step(theta, g, lr)
        except NonFiniteError as e:
            diverge(k, str(e))
        if config.record_kappa and k > 1:
            row.alpha = info.alpha
        row.grad_norm, row.boosted_norm, row.step_norm = info.grad_norm, info.boosted_norm, info.step_norm
        row.flags.extend(info.flags)
        if pending is not None:
            emit(pending)
        if evaluate is not None and (k == 1 or k % config.eval_every == 0 or k == T):
            row.rel_l2, row.linf = evaluate(theta)
            if writer is not None:
                writer.flush()
        pending = row
    emit(pending)
    if writer is not None:
        writer.flush()
    res.theta = theta
    return res


def _pde_objective(spec, problem, samples, ic_targets, plan=None, rng_path=None):
    state = {"k": 0}

    def objective(theta):
        smp = samples
        if plan is not None and plan.resample_each_iter:
            state["k"] += 1
            fresh = sample_domain(problem, plan, _t_range(samples), stream=rng_path + (state["k"],))
            smp = replace(fresh, initial=samples.initial, test=samples.test)
        loss, grads, extra = grad(lambda th: pinn_loss(spec, th, problem, smp, ic_targets), theta)
        comps = {k: float(v.value) for k, v in extra[0].items()}
        return loss, grads, comps

    return objective


def _t_range(samples):
    t = samples.interior[:, -1]
    return (float(t.min()), float(t.max())) if len(t) else None


def make_evaluator(spec, problem, X):
    """Metrics on fixed points ``X`` against the problem's reference solution."""
    if not problem.has_reference or len(X) == 0:
        return None
    ref = problem.reference(X)

    def evaluate(theta):
        pred = predict(spec, theta, X)
        return (
            {c: relative_l2(p, r) for c, p, r in zip(problem.outputs, pred, ref)},
            {c: linf(p, r) for c, p, r in zip(problem.outputs, pred, ref)},
        )

    return evaluate


def _window_edges(problem, windows):
    t0, t1 = problem.horizon
    return np.linspace(t0, t1, windows + 1)


def _in_window(t, edges, w):
    lo, hi = edges[w], edges[w + 1]
    return (t >= lo) & ((t < hi) | ((w == len(edges) - 2) & (t <= hi)))


@dataclass
class MarchResult:
    thetas: list
    history: list
    ic_targets: list  # per window, the stored initial-condition targets (None for window 0)
    ic_points: list
    edges: np.ndarray
    spec: MlpSpec
    final_rel_l2: dict | None = None
    final_linf: dict | None = None
    monitor_violations: int = 0
    r_over_one: int = 0
    r_count: int = 0

    def predict(self, X: np.ndarray) -> list[np.ndarray]:
        """Stitched prediction: each point uses the network of its time window."""
        X = np.asarray(X, dtype=np.float64)
        out = None
        for w, th in enumerate(self.thetas):
            sel = _in_window(X[:, -1], self.edges, w)
            if not np.any(sel):
                continue
            vals = predict(self.spec, th, X[sel])
            if out is None:
                out = [np.full(len(X), np.nan) for _ in vals]
            for o, v in zip(out, vals):
                o[sel] = v
        return out


def time_march(spec, problem, plan, config: TrainConfig, seed: int | None = None, writer=None, checkpoint_dir=None):
    """Train window by window over uniform slices of the time horizon.

    Parameters are warm-started from the previous window, optimizer state
    is reset, and the initial-condition targets of window ``w + 1`` are the
    stored predictions of window ``w``'s network at the shared initial
    points moved to the window boundary.
    """
    seed = config.seeds[0] if seed is None else int(seed)
    if seed not in config.seeds:
        raise ValueError(f"seed {seed} is not in the configured seed list {config.seeds}")
    edges = _window_edges(problem, config.windows)
    theta = init_glorot(spec, Rng(seed))
    base = sample_domain(problem, plan, (edges[0], edges[1]), stream=(seed, 0))
    thetas, history, ic_list, ic_pts = [], [], [], []
    ic = None
    monitor = 0
    r_over, r_cnt = 0, 0
    for w in range(config.windows):
        t_range = (float(edges[w]), float(edges[w + 1]))
        samples = base if w == 0 else sample_domain(problem, plan, t_range, stream=(seed, w))
        init_pts = base.initial.copy()
        init_pts[:, -1] = edges[w]
        samples = replace(samples, initial=init_pts)
        if w > 0:
            ic = predict(spec, theta, init_pts)
        ic_list.append(ic)
        ic_pts.append(init_pts)
        test = samples.test[_in_window(samples.test[:, -1], edges, w)]
        objective = _pde_objective(spec, problem, samples, ic, plan, (seed, w))
        res = run_loop(
            objective,
            theta,
            config,
            window=w,
            iter_offset=w * config.iterations,
            writer=writer,
            evaluate=make_evaluator(spec, problem, test),
        )
        theta = res.theta
        thetas.append(theta)
        history.extend(res.history)
        monitor += res.optimizer.monitor.total_violations
        r_over += res.r_over_one
        r_cnt += res.r_count
        if checkpoint_dir is not None:
            arrays, meta = res.optimizer.state_arrays()
            save_params(
                Path(checkpoint_dir) / f"window{w}.ckpt",
                spec,
                theta,
                extra=arrays,
                meta={"optimizer": meta, "window": w, "seed": seed},
            )
    out = MarchResult(thetas, history, ic_list, ic_pts, edges, spec, monitor_violations=monitor)
    out.r_over_one, out.r_count = r_over, r_cnt
    X = base.test
    if problem.has_reference and len(X):
        ref = problem.reference(X)
        pred = out.predict(X)
        out.final_rel_l2 = {c: relative_l2(p, r) for c, p, r in zip(problem.outputs, pred, ref)}
        out.final_linf = {c: linf(p, r) for c, p, r in zip(problem.outputs, pred, ref)}
    return out


def train(spec, problem, plan, config: TrainConfig, seed: int | None = None, writer=None, checkpoint_dir=None):
    """Single-window training over the whole horizon; returns ``(theta, history)``."""
    cfg = replace(config, windows=1)
    res = time_march(spec, problem, plan, cfg, seed, writer, checkpoint_dir)
    return res.thetas[-1], res.history
