"""Acceptance criteria 1-11, each at its stated tolerance.

The desk-scale runs (6, 7, 8, 9) take most of the time, about 30 minutes on
one core. Criterion 5 has no run of its own: it sums the lemma-monitor
violations of every training run made in this module.
"""
import json
import math
from pathlib import Path

import numpy as np
import pytest

from capinn.autodiff import cos, exp, grad, sin, value_of
from capinn.cli import compare_summaries, load_config, main, reduction
from capinn.mathcore import Rng
from capinn.network import MlpSpec, init_glorot
from capinn.optim import make_optimizer
from capinn.pde import (
    BelousovZhabotinsky,
    Burgers,
    GrayScott,
    Heat,
    KuramotoSivashinsky2D,
    SamplePlan,
    collect,
    pinn_loss,
    predict,
    sample_domain,
)
from capinn.trainer import MetricsWriter, TrainConfig, read_grid, read_metrics, run_loop, time_march

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
MONITORS: dict[str, int] = {}  # run label -> lemma-monitor violations


@pytest.fixture
def check(request):
    def record(n, name, ok, detail):
        request.config.acceptance_lines[n] = (bool(ok), name, detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, f"criterion {n} ({name}) failed: {detail}"

    return record


@pytest.fixture(scope="module")
def out(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def _run(cfg, root):
    """``capinn run`` into ``root``; returns the experiment summary."""
    code = main(["run", str(CONFIGS / cfg), "--out", str(root)])
    exp = load_config(CONFIGS / cfg)
    summary = json.loads((Path(root) / exp.name / "summary.json").read_text())
    summary["exit_code"] = code
    MONITORS[exp.name] = summary["monitor_violations"]
    return summary


# -- 1 ------------------------------------------------------------------------


def _trajectory(exp, name, opt_params, iterations):
    problem = exp.make_problem()
    seed = exp.train.seeds[0]
    samples = sample_domain(problem, exp.plan, stream=(seed, 0))
    cfg = TrainConfig(iterations=iterations, lr=exp.train.lr, optimizer=name, opt_params=opt_params, seeds=(seed,))
    seen = []

    def objective(theta):
        seen.append(b"".join(v.tobytes() for v in theta.values()))
        loss, g, extra = grad(lambda th: pinn_loss(exp.spec, th, problem, samples), theta)
        return loss, g, {}

    res = run_loop(objective, init_glorot(exp.spec, Rng(seed)), cfg)
    seen.append(b"".join(v.tobytes() for v in res.theta.values()))
    MONITORS[f"identity-{name}"] = res.optimizer.monitor.total_violations
    return seen


def test_c01_identity_equivalence(check):
    exp = load_config(CONFIGS / "heat2d_adamw.cfg")
    same = {}
    for base in ("adamw", "muon", "soap"):
        a = _trajectory(exp, base, {}, 500)
        b = _trajectory(exp, f"ca-{base}", {"alpha_base": 0.0}, 500)
        same[base] = len(a) == len(b) == 501 and a == b
    check(1, "identity equivalence", all(same.values()), ", ".join(f"{k} {'bitwise equal' if v else 'DIFFERS'}" for k, v in same.items()) + " over 500 iterations")


# -- 2 ------------------------------------------------------------------------


def test_c02_gradient_correctness(check):
    p = Heat(d=2)
    spec = MlpSpec(3, 32, 2)
    theta = init_glorot(spec, Rng(0))
    s = sample_domain(p, SamplePlan(n_f=32, n_b=8, n_0=8, seed=0))
    loss_of = lambda th: float(value_of(pinn_loss(spec, th, p, s)[0]))
    _, g, _ = grad(lambda th: pinn_loss(spec, th, p, s), theta)
    worst = 0.0
    for k, v in theta.items():
        for i in range(v.size):
            h = 1e-3 * max(1.0, abs(v.ravel()[i]))
            vals = []
            for step in (-2, -1, 1, 2):
                th = {kk: vv.copy() for kk, vv in theta.items()}
                th[k].ravel()[i] += step * h
                vals.append(loss_of(th))
            fd = (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * h)
            a = g[k].ravel()[i]
            denom = max(abs(a), abs(fd))
            if denom > 0.0:
                worst = max(worst, abs(a - fd) / denom)
    n = sum(v.size for v in theta.values())
    check(2, "gradient correctness", worst <= 1e-6, f"max relative error {worst:.2e} over {n} parameters (limit 1e-6)")


# -- 3 ------------------------------------------------------------------------


def _fd_weights(order, half):
    """Central stencil weights for d^order/dx^order on offsets -half..half (unit spacing)."""
    offs = np.arange(-half, half + 1, dtype=np.float64)
    A = np.vander(offs, increasing=True).T
    b = np.zeros(len(offs))
    b[order] = math.factorial(order)
    return offs, np.linalg.solve(A, b)


def _fd_partial(f, x, idx, h=0.02, half=5):
    """Tensor-product central differences of ``f`` (numpy in, list of arrays out)."""
    axes = [(a, o) for a, o in enumerate(idx) if o]
    pts = [np.array(x, dtype=np.float64)]
    wts = [1.0]
    for a, o in axes:
        offs, w = _fd_weights(o, half)
        new_pts, new_w = [], []
        for p, c in zip(pts, wts):
            for d, wd in zip(offs, w):
                q = p.copy()
                q[a] += d * h
                new_pts.append(q)
                new_w.append(c * wd / h**o)
        pts, wts = new_pts, new_w
    vals = f(np.array(pts))
    return [float(np.dot(wts, v)) for v in vals]


def _surrogate(n_out):
    """Smooth analytic stand-in for problems without a closed-form solution."""

    def fn(xs):
        x, t = xs[0], xs[-1]
        return [sin(x * (0.7 * (j + 1)) + t * 0.3) * exp(t * (-0.2 * (j + 1))) + cos(x * 0.5) for j in range(n_out)]

    return fn


def test_c03_jet_correctness(check):
    cases = [Heat(d=2), Heat(d=10), KuramotoSivashinsky2D(), GrayScott(), BelousovZhabotinsky(), Burgers()]
    worst, worst_where = 0.0, ""
    residual_max = 0.0
    for prob in cases:
        if prob.has_exact:
            jet_fn = prob.exact_jet
            np_fn = lambda X, prob=prob: prob.exact(X)
        else:
            jet_fn = _surrogate(len(prob.outputs))
            np_fn = lambda X, fn=jet_fn: fn([X[:, i] for i in range(X.shape[1])])
        X = sample_domain(prob, SamplePlan(n_f=6, seed=11)).interior
        D = collect(jet_fn, X, prob.requests())
        for r in prob.requests():
            fd = np.array([_fd_partial(np_fn, x, r) for x in X])
            got = np.stack([np.asarray(value_of(v), dtype=np.float64) for v in D[r]], axis=1)
            rel = np.max(np.abs(got - fd)) / np.max(np.abs(fd))
            if rel > worst:
                worst, worst_where = rel, f"{prob.name} {r}"
        if prob.has_exact:
            Xr = sample_domain(prob, SamplePlan(n_f=256, seed=7)).interior
            Dr = collect(prob.exact_jet, Xr, prob.requests())
            residual_max = max(residual_max, max(float(np.max(np.abs(value_of(v)))) for v in prob.residual(Xr, Dr)))
    ok = worst <= 1e-5 and residual_max <= 1e-8
    check(3, "jet correctness", ok, f"max derivative relative error {worst:.2e} ({worst_where}); max exact-solution residual {residual_max:.2e}")


# -- 4 ------------------------------------------------------------------------


def test_c04_quadratic_kappa(check):
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.standard_normal((10, 10)))
    H = Q @ np.diag(np.geomspace(0.1, 10.0, 10)) @ Q.T
    opt = make_optimizer("ca-adamw")
    theta = {"w": rng.standard_normal(10)}
    prev = None
    worst = 0.0
    for k in range(200):
        g = {"w": H @ theta["w"]}
        new, info = opt.step(theta, g, 1e-2)
        if prev is not None:
            s = theta["w"] - prev
            worst = max(worst, abs(info.kappa - s @ H @ s / (s @ s)))
        prev = theta["w"]
        theta = new
    MONITORS["quadratic"] = opt.monitor.total_violations
    check(4, "quadratic kappa exactness", worst <= 1e-10, f"max |kappa - s'Hs/|s|^2| = {worst:.2e} over 199 steps")


# -- 6, 7 ---------------------------------------------------------------------


def _ordering(n, name, base_cfg, ca_cfg, out, check, extra=None):
    a = _run(base_cfg, out)
    b = _run(ca_cfg, out)
    compare_summaries(a, b)  # raises if seeds or schedules differ
    ma, mb = a["mean"]["rel_l2_u"], b["mean"]["rel_l2_u"]
    ok = ma >= mb and not a["diverged_seeds"] and not b["diverged_seeds"] and a["exit_code"] == b["exit_code"] == 0
    detail = f"mean rel L2 AdamW {ma:.6e}, CA-AdamW {mb:.6e}"
    if extra:
        ok2, d2 = extra(a, b)
        ok, detail = ok and ok2, f"{detail}; {d2}"
    check(n, name, ok, detail)


@pytest.mark.slow
def test_c06_heat_ordering(out, check):
    best = lambda a, b: (b["best"]["rel_l2_u"] < 5e-2, f"CA-AdamW best {b['best']['rel_l2_u']:.3e} (limit 5e-2)")
    _ordering(6, "heat d=2 ordering", "heat2d_adamw.cfg", "heat2d_ca_adamw.cfg", out, check, best)


@pytest.mark.slow
def test_c07_ks_ordering(out, check):
    div = lambda a, b: (True, f"diverged seeds {a['diverged_seeds'] + b['diverged_seeds'] or 'none'}")
    _ordering(7, "KS 2-D ordering", "ks2d_adamw.cfg", "ks2d_ca_adamw.cfg", out, check, div)


# -- 8 ------------------------------------------------------------------------


def _error_sawtooth(rows, outputs, T):
    """Boundary jump and post-peak decrease of the evaluated errors, per output."""
    ok, parts = True, []
    for c in outputs:
        ev = [(int(r["iter"]), int(r["window"]), float(r[f"rel_l2_{c}"])) for r in rows if r[f"rel_l2_{c}"] not in ("", None)]
        at = {i: e for i, _, e in ev}
        jump = at[T + 1] > at[T]
        mono = True
        for w in range(2):
            errs = [e for _, wi, e in ev if wi == w]
            peak = int(np.argmax(errs))
            mono = mono and all(b <= a for a, b in zip(errs[peak:], errs[peak + 1 :]))
        ok = ok and jump and mono
        parts.append(f"rel L2 {c} {at[T]:.3e} -> {at[T + 1]:.3e} at the boundary, {'monotone' if mono else 'NOT monotone'} after each peak")
    return ok, parts


@pytest.mark.slow
def test_c08_time_marching(out, check):
    exp = load_config(CONFIGS / "gray_scott_desk_ca_adamw.cfg")
    problem = exp.make_problem()
    csv_path = out / "gray_scott_metrics.csv"
    with MetricsWriter(csv_path, problem.outputs) as w:
        res = time_march(exp.spec, problem, exp.plan, exp.train, exp.train.seeds[0], writer=w)
    MONITORS[exp.name] = res.monitor_violations
    handoff = max(float(np.max(np.abs(t - p))) for t, p in zip(res.ic_targets[1], predict(exp.spec, res.thetas[0], res.ic_points[1])))
    rows = read_metrics(csv_path)
    T = exp.train.iterations
    loss = np.array([float(r["loss"]) for r in rows])
    ok = handoff == 0.0 and len(loss) == 2 * T
    parts = [f"IC handoff max diff {handoff:g}"]
    for wdx in range(2):
        lw = loss[wdx * T : (wdx + 1) * T]
        peak = int(np.argmax(lw))
        ratio = lw[peak] / lw[-1]
        ok = ok and ratio >= 10.0
        parts.append(f"window {wdx} loss peak/final {ratio:.1f} (peak at +{peak + 1})")
    saw_ok, saw = _error_sawtooth(rows, problem.outputs, T)
    check(8, "time-marching integrity", ok and saw_ok, "; ".join(parts + saw))


# -- 9, 11 --------------------------------------------------------------------


@pytest.fixture(scope="module")
def burgers(out):
    return {"tanh": _run("burgers_ca_adamw.cfg", out), "fixed": _run("burgers_ca_adamw_fixed.cfg", out)}


@pytest.mark.slow
def test_c09_secant_ratio_ab(burgers, check):
    frac = {}
    for k, s in burgers.items():
        frac[k] = s["r_over_one"] / s["r_count"]
    ok = frac["tanh"] <= frac["fixed"]
    check(9, "secant error ratio A/B", ok, f"fraction R>1: gated {frac['tanh']:.4f} ({burgers['tanh']['r_over_one']}/{burgers['tanh']['r_count']}), fixed {frac['fixed']:.4f} ({burgers['fixed']['r_over_one']}/{burgers['fixed']['r_count']})")


@pytest.mark.slow
def test_c11_landscape(burgers, out, check):
    cfg = CONFIGS / "burgers_ca_adamw.cfg"
    exp = load_config(cfg)
    ckpt = out / exp.name / str(exp.train.seeds[0]) / "final.ckpt"
    full, data = out / "landscape.txt", out / "landscape_data.txt"
    assert main(["landscape", str(cfg), "--checkpoint", str(ckpt), "--out", str(full)]) == 0
    assert main(["landscape", str(cfg), "--checkpoint", str(ckpt), "--data-only", "--out", str(data)]) == 0
    gf, _ = read_grid(full)
    gd, _ = read_grid(data)
    rf, rd = np.nanmax(gf) - np.nanmin(gf), np.nanmax(gd) - np.nanmin(gd)
    check(11, "landscape sanity", rd < rf, f"log10 loss range data-only {rd:.3f} < data+residual {rf:.3f}")


# -- 10 -----------------------------------------------------------------------


def test_c10_table_arithmetic(tmp_path, capsys, check):
    got = []
    for a, b, want in ((5.66e-3, 1.34e-4, 97.63), (1.44e-1, 8.20e-3, 94.31)):
        sa = {"optimizer": "soap", "seeds": [0], "mean": {"rel_l2_u": a}}
        sb = {"optimizer": "ca-soap", "seeds": [0], "mean": {"rel_l2_u": b}}
        for d, s in (("A", sa), ("B", sb)):
            (tmp_path / d).mkdir(exist_ok=True)
            (tmp_path / d / "summary.json").write_text(json.dumps(s))
        assert main(["compare", str(tmp_path / "A"), str(tmp_path / "B"), "--csv", str(tmp_path / "t.csv")]) == 0
        shown = float((tmp_path / "t.csv").read_text().splitlines()[1].split(",")[-1])
        got.append((want, shown, reduction(a, b)))
    ok = all(abs(s - w) <= 0.01 and abs(r - w) <= 0.01 for w, s, r in got)
    check(10, "table arithmetic", ok, ", ".join(f"{r:.4f}% (expected {w:.2f}%)" for w, _, r in got))


# -- 5 (last: aggregates the runs above) ----------------------------------------


@pytest.mark.slow
def test_c05_lemma_monitors(out, check, burgers):
    expected = {"identity-adamw", "identity-ca-adamw", "identity-muon", "identity-ca-muon",
                "identity-soap", "identity-ca-soap", "quadratic",
                "heat2d_adamw", "heat2d_ca_adamw", "ks2d_adamw", "ks2d_ca_adamw", "gray_scott_desk_ca_adamw",
                "burgers_ca_adamw", "burgers_ca_adamw_fixed"}
    missing = sorted(expected - MONITORS.keys())
    total = sum(MONITORS.values())
    ok = total == 0 and not missing
    detail = f"{total} violations across {len(MONITORS)} runs"
    if missing:
        detail += f"; runs not executed in this session: {', '.join(missing)}"
    check(5, "lemma monitors", ok, detail)
