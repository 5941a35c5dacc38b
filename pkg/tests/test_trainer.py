import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capinn.errors import DivergenceError
from capinn.mathcore import Rng
from capinn.network import MlpSpec, ParamSet, init_glorot, load_params
from capinn.pde import SamplePlan, make_problem, predict
from capinn.trainer import (
    LrSchedule,
    MetricsRow,
    MetricsWriter,
    SecantTracker,
    TrainConfig,
    columns,
    estimate_tau,
    landscape_project,
    random_directions,
    read_grid,
    read_metrics,
    run_loop,
    secant_error_ratio,
    time_march,
    train,
    write_grid,
)

# R for the scripted trajectory in test_secant_ratio_hand_trace, derived by hand:
# tau = 28/61, numerator sqrt(23.49)/61, denominator sqrt(0.85)
R_HAND = math.sqrt(23.49) / (61 * math.sqrt(0.85))


def _heat_setup(n_f=32, width=8):
    p = make_problem("heat", d=2)
    spec = MlpSpec(3, width, 2)
    plan = SamplePlan(n_f=n_f, n_b=16, n_0=16, n_test=200)
    return p, spec, plan


def test_schedule_shape():
    s = LrSchedule(1e-2, 0.05, 0.01)
    T = 200
    lrs = [s(k, T) for k in range(1, T + 1)]
    assert lrs[9] == 1e-2 and lrs[0] == 1e-3
    assert all(b <= a for a, b in zip(lrs[10:], lrs[11:]))
    assert abs(lrs[-1] - 1e-4) <= 1e-18
    assert LrSchedule(1.0, 0.0)(1, 1) == 1.0
    with pytest.raises(ValueError):
        LrSchedule(0.0)
    with pytest.raises(ValueError):
        LrSchedule(1.0, floor_frac=0.0)


def test_one_iteration_run():
    p, spec, plan = _heat_setup()
    cfg = TrainConfig(iterations=1)
    th, hist = train(spec, p, plan, cfg, 0)
    assert len(hist) == 1
    th0 = init_glorot(spec, Rng(0))
    opt = cfg.make_optimizer()
    from capinn.autodiff import grad
    from capinn.pde import pinn_loss, sample_domain

    s = sample_domain(p, plan, (0.0, 1.0), stream=(0, 0))
    _, g, _ = grad(lambda t: pinn_loss(spec, t, p, s), th0)
    want, _ = opt.step(th0, g, cfg.schedule(1, 1))
    for k in th:
        np.testing.assert_array_equal(th[k], want[k])


@pytest.mark.parametrize("base", ["adamw", "muon", "soap"])
def test_ca_identity_loss_stream(base):
    p, spec, plan = _heat_setup()
    a = train(spec, p, plan, TrainConfig(iterations=30, optimizer=base))[1]
    b = train(spec, p, plan, TrainConfig(iterations=30, optimizer="ca-" + base, opt_params={"alpha_base": 0.0}))[1]
    assert [r.loss for r in a] == [r.loss for r in b]


def test_quadratic_surrogate_converges():
    target = Rng(1).normal(size=10)

    def objective(th):
        d = th["x"] - target
        return float(d @ d), {"x": 2 * d}, {}

    cfg = TrainConfig(iterations=2000, lr=1e-2, warmup_frac=0.0, floor_frac=1.0, eval_every=2000)  # constant eta
    res = run_loop(objective, ParamSet(x=np.zeros(10)), cfg)
    g = 2 * (res.theta["x"] - target)
    assert np.linalg.norm(g) < 1e-3
    assert res.optimizer.monitor.total_violations == 0


def test_kappa_alpha_R_from_iteration_two():
    p, spec, plan = _heat_setup()
    _, hist = train(spec, p, plan, TrainConfig(iterations=6, optimizer="ca-adamw", record_R=True, eval_every=3))
    assert hist[0].kappa is None and hist[0].alpha is None and hist[0].R is None
    for r in hist[1:-1]:
        assert r.kappa is not None and r.alpha is not None and r.R is not None
    assert hist[0].rel_l2 is not None and hist[2].rel_l2 is not None and hist[1].rel_l2 is None


def test_time_march_single_window_equals_train():
    p, spec, plan = _heat_setup()
    cfg = TrainConfig(iterations=10, optimizer="ca-adamw")
    th, hist = train(spec, p, plan, cfg)
    res = time_march(spec, p, plan, cfg)
    assert [r.loss for r in hist] == [r.loss for r in res.history]
    for k in th:
        np.testing.assert_array_equal(th[k], res.thetas[0][k])


def test_time_march_handoff_exact(tmp_path):
    p, spec, plan = _heat_setup()
    cfg = TrainConfig(iterations=10, windows=2, optimizer="ca-adamw")
    res = time_march(spec, p, plan, cfg, checkpoint_dir=tmp_path)
    assert res.ic_targets[0] is None
    np.testing.assert_array_equal(res.ic_points[1][:, -1], 0.5)
    pred = predict(spec, res.thetas[0], res.ic_points[1])
    for a, b in zip(res.ic_targets[1], pred):
        assert np.max(np.abs(a - b)) == 0.0
    assert [r.window for r in res.history] == [0] * 10 + [1] * 10
    assert [r.iter for r in res.history] == list(range(1, 21))
    # optimizer state reset: window 1 starts with step 1 again (alpha recorded only from its 2nd step)
    assert res.history[10].alpha is None and res.history[11].alpha is not None
    spec2, th1, extra, meta = load_params(tmp_path / "window1.ckpt")
    assert meta["window"] == 1 and any(k.startswith("opt/") for k in extra)
    for k in th1:
        np.testing.assert_array_equal(th1[k], res.thetas[1][k])


def test_time_march_seed_must_be_listed():
    p, spec, plan = _heat_setup()
    with pytest.raises(ValueError):
        time_march(spec, p, plan, TrainConfig(iterations=1, seeds=(0, 1)), seed=5)


def test_determinism_bitwise(tmp_path):
    p, spec, plan = _heat_setup()
    cfg = TrainConfig(iterations=15, optimizer="ca-soap", record_R=True, eval_every=5)
    outs = []
    for name in ("a.csv", "b.csv"):
        with MetricsWriter(tmp_path / name, p.outputs) as w:
            time_march(spec, p, plan, cfg, writer=w)
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    header = outs[0].decode().splitlines()[0]
    assert header == ",".join(columns(p.outputs))
    assert header == "iter,window,loss,loss_f,loss_b,loss_i,kappa,alpha,grad_norm,boosted_norm,step_norm,R,rel_l2_u,linf_u,flags"
    rows = read_metrics(tmp_path / "a.csv")
    assert len(rows) == 15


def test_divergence_aborts_with_partial_metrics(tmp_path):
    calls = {"n": 0}

    def objective(th):
        calls["n"] += 1
        loss = 1.0 if calls["n"] < 5 else float("nan")
        return loss, {"x": np.ones(2)}, {}

    with MetricsWriter(tmp_path / "m.csv", ("u",)) as w:
        with pytest.raises(DivergenceError) as e:
            run_loop(objective, ParamSet(x=np.zeros(2)), TrainConfig(iterations=10), writer=w, window=2, iter_offset=100)
    assert e.value.iteration == 105 and e.value.window == 2
    assert len((tmp_path / "m.csv").read_text().splitlines()) == 1 + 4


def test_divergence_threshold():
    def objective(th):
        return 2e12, {"x": np.ones(1)}, {}

    with pytest.raises(DivergenceError):
        run_loop(objective, ParamSet(x=np.zeros(1)), TrainConfig(iterations=3))


def test_resample_each_iter_changes_points():
    p, spec, _ = _heat_setup()
    plan = SamplePlan(n_f=16, n_b=8, n_0=8, n_test=0, resample_each_iter=True)
    fixed = SamplePlan(n_f=16, n_b=8, n_0=8, n_test=0)
    a = train(spec, p, plan, TrainConfig(iterations=3))[1]
    b = train(spec, p, fixed, TrainConfig(iterations=3))[1]
    assert a[0].loss != b[0].loss or a[1].loss != b[1].loss


def test_secant_ratio_examples():
    r = Rng(0)
    g, y = r.normal(size=5), r.normal(size=5)
    assert secant_error_ratio(g + 0.7 * y, g, y, 0.7) == 0.0
    gn = r.normal(size=5)
    assert secant_error_ratio(gn, g, y, 0.0) == 1.0


def test_secant_ratio_hand_trace():
    H = np.diag([1.0, 3.0])
    thetas = [np.array([1.0, 1.0]), np.array([0.5, 0.4]), np.array([0.3, 0.1])]
    tr = SecantTracker()
    outs = [tr.push(t, H @ t) for t in thetas]
    assert outs[0] is None and outs[1] is None
    R, ok = outs[2]
    assert ok and abs(R - R_HAND) <= 1e-12


def test_estimate_tau_examples():
    s = np.array([1.0, -2.0, 0.5])
    assert estimate_tau(2 * s, s) == 2.0
    assert estimate_tau(np.array([2.0, 1.0, 0.0]), s) == 0.0
    assert estimate_tau(s, np.zeros(3)) == 0.0


@given(seed=st.integers(0, 10_000))
def test_tau_residual_orthogonal(seed):
    r = Rng(seed)
    d, s = r.normal(size=8), r.normal(size=8)
    tau = estimate_tau(d, s)
    assert abs(np.dot(d - tau * s, s)) <= 1e-12 * np.linalg.norm(d) * np.linalg.norm(s)


def test_unreliable_R_flagged():
    tr = SecantTracker()
    th, g = np.zeros(2), np.ones(2)
    tr.push(th, g)
    tr.push(th + 1, g)
    R, ok = tr.push(th + 2, g)
    assert not ok


def test_landscape_center_and_symmetry(tmp_path):
    center = {"a": np.array([1.0, 2.0]), "b": np.array([[0.5]])}
    loss = lambda th: 1.0 + float(np.sum(th["a"] ** 2) + np.sum(th["b"] ** 2))
    g = landscape_project(center, loss, 2, 1e-12, seed=0)
    np.testing.assert_allclose(g, math.log10(loss(center)), atol=1e-12)
    quad = lambda th: 1.0 + float(sum(np.sum((th[k] - center[k]) ** 2) for k in th))
    g3 = landscape_project(center, quad, 3, 0.5, seed=1)
    np.testing.assert_allclose(g3, g3[::-1, ::-1], atol=1e-15)
    write_grid(tmp_path / "g.txt", g3, 0.5)
    assert (tmp_path / "g.txt").read_text().splitlines()[0] == "3 0.5"
    back, ext = read_grid(tmp_path / "g.txt")
    np.testing.assert_array_equal(back, g3)
    with pytest.raises(ValueError):
        landscape_project(center, loss, 1, 1.0, 0)
    with pytest.raises(ValueError):
        landscape_project(center, loss, 3, 0.0, 0)


def test_landscape_nan_sentinel():
    center = {"a": np.array([1.0])}
    g = landscape_project(center, lambda th: float("inf") if th["a"][0] > 1.5 else 2.0, 3, 1.0, seed=0)
    assert np.isnan(g).any() and np.isfinite(g).any()


def test_filter_normalized_directions():
    center = {"W": Rng(0).normal(size=(3, 4)), "b": np.zeros(3)}
    d1, d2 = random_directions(center, seed=5)
    assert abs(np.linalg.norm(d1["W"]) - np.linalg.norm(center["W"])) <= 1e-12
    np.testing.assert_array_equal(d1["b"], 0.0)
    raw = random_directions(center, seed=5, normalize="none")[0]
    assert np.linalg.norm(raw["b"]) > 0


def test_metrics_writer_formatting(tmp_path):
    row = MetricsRow(iter=1, window=0, loss=0.5, kappa=None, rel_l2={"u": 0.1}, linf={"u": 0.2}, flags=["s_guard", "violation:alpha"])
    with MetricsWriter(tmp_path / "m.csv", ("u",)) as w:
        w.write(row)
    line = (tmp_path / "m.csv").read_text().splitlines()[1]
    assert line == "1,0,0.5,,,,,,,,,,0.1,0.2,s_guard;violation:alpha"


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(iterations=0)
    with pytest.raises(ValueError):
        TrainConfig(seeds=())
    with pytest.raises(ValueError):
        TrainConfig(eval_every=0)
