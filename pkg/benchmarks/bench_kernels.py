"""Compiled kernels vs the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Times each kernel on both backends at a few sizes, then one short heat run
end to end in a subprocess per backend (CAPINN_PURE selects the fallback).
"""
import argparse
import os
import subprocess
import sys
import tempfile
import textwrap
import timeit

import numpy as np

from capinn import _fallback

try:
    from capinn import _kernels
except ImportError:
    _kernels = None

E2E_CONFIG = """\
[experiment]
name = bench
problem = heat

[problem]
d = 2

[sampling]
n_f = 512
n_b = 100
n_0 = 100
n_test = 0

[train]
iterations = 100
eval_every = 100

[optimizer]
name = ca-adamw
"""


def _best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_jacobi(mod, n, repeat):
    rng = np.random.default_rng(n)
    B = rng.standard_normal((n, n))
    A0 = B @ B.T

    def run():
        a = A0.copy()
        v = np.eye(n)
        mod.jacobi_sweeps(a, v, 1e-12 * np.linalg.norm(A0), 50)

    return _best(run, repeat, 1 if n > 32 else 5)


def bench_tanh_jet(mod, rows, K, repeat, dirs=3):
    # a width-32 layer over ``rows`` collocation points, ``dirs`` jet directions
    M = rows * 32
    rng = np.random.default_rng(rows)
    x0 = rng.standard_normal(M)
    xs = [rng.standard_normal((dirs, M)) for _ in range(K)]
    gs = [rng.standard_normal((dirs, M)) for _ in range(K)]
    g0 = rng.standard_normal(M)

    def run():
        t, _ = mod.tanh_jet_fwd(x0, xs)
        mod.tanh_jet_bwd(t, xs, g0, gs)

    return _best(run, repeat, 10)


def bench_e2e(pure, repeat):
    with tempfile.TemporaryDirectory() as d:
        cfg = os.path.join(d, "bench.cfg")
        with open(cfg, "w") as f:
            f.write(E2E_CONFIG)
        env = dict(os.environ, CAPINN_PURE="1" if pure else "0")
        code = textwrap.dedent(
            f"""
            import time
            from capinn.cli import load_config
            from capinn.trainer import train
            exp = load_config({cfg!r})
            t = time.perf_counter()
            train(exp.spec, exp.make_problem(), exp.plan, exp.train)
            print(time.perf_counter() - t)
            """
        )
        times = []
        for _ in range(repeat):
            out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
            times.append(float(out.stdout.strip()))
        return min(times) / 100


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-e2e", action="store_true")
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the fallback can be timed")
    rows = []
    for n in (8, 32, 80):
        rows.append((f"jacobi n={n}", lambda m, n=n: bench_jacobi(m, n, args.repeat)))
    for r, K in ((512, 2), (2048, 2), (2048, 4)):
        rows.append((f"tanh jet {r}x32 K={K}", lambda m, r=r, K=K: bench_tanh_jet(m, r, K, args.repeat)))
    print(f"{'kernel':<24}{'cython ms':>12}{'python ms':>12}{'speedup':>10}")
    for name, fn in rows:
        tp = fn(_fallback) * 1e3
        tc = fn(_kernels) * 1e3 if _kernels is not None else float("nan")
        print(f"{name:<24}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")
    if not args.no_e2e:
        tc = bench_e2e(False, min(args.repeat, 3)) * 1e3
        tp = bench_e2e(True, min(args.repeat, 3)) * 1e3
        print(f"{'heat d=2 ms/iter':<24}{tc:>12.3f}{tp:>12.3f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
