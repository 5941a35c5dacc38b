"""Compiled kernels against the numpy fallback."""
import os
import subprocess
import sys

import numpy as np
import pytest

from capinn import _fallback, kernels
from capinn.mathcore import Rng

compiled = pytest.importorskip("capinn._kernels")


def test_backend_selection_env():
    code = "import capinn.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, CAPINN_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("n", [1, 2, 7, 20])
def test_jacobi_parity(n):
    A = Rng(n).normal(size=(n, n))
    S = A + A.T
    a1, v1 = S.copy(), np.eye(n)
    a2, v2 = S.copy(), np.eye(n)
    tol = 1e-13 * np.linalg.norm(S)
    s1 = compiled.jacobi_sweeps(a1, v1, tol, 100)
    s2 = _fallback.jacobi_sweeps(a2, v2, tol, 100)
    assert s1 == s2
    np.testing.assert_allclose(a1, a2, atol=1e-12 * np.linalg.norm(S))
    np.testing.assert_allclose(v1, v2, atol=1e-11)


@pytest.mark.parametrize("K,D", [(1, 1), (2, 3), (3, 2), (4, 1), (4, 5)])
def test_tanh_jet_parity(K, D):
    r = Rng(10 * K + D)
    M = 33
    x0 = r.normal(size=M)
    xs = [r.normal(size=(D, M)) for _ in range(K)]
    t1, y1 = compiled.tanh_jet_fwd(x0, xs)
    t2, y2 = _fallback.tanh_jet_fwd(x0, xs)
    np.testing.assert_allclose(t1, t2, rtol=1e-15, atol=1e-15)
    for a, b in zip(y1, y2):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    g0 = r.normal(size=M)
    gs = [r.normal(size=(D, M)) for _ in range(K)]
    b1 = compiled.tanh_jet_bwd(t1, xs, g0, gs)
    b2 = _fallback.tanh_jet_bwd(t2, xs, g0, gs)
    np.testing.assert_allclose(b1[0], b2[0], rtol=1e-12, atol=1e-12)
    for a, b in zip(b1[1], b2[1]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_pure_backend_end_to_end():
    """A short training run gives the same losses on both backends (to rounding).

    SOAP is left out: its early Kronecker factors are eps*I plus a low-rank
    term, so the eigenbasis inside the degenerate subspace is arbitrary.
    """
    code = (
        "from capinn.network import MlpSpec; from capinn.pde import make_problem, SamplePlan;"
        "from capinn.trainer import TrainConfig, train;"
        "p = make_problem('heat', d=2); s = MlpSpec(3, 8, 2);"
        "th, h = train(s, p, SamplePlan(n_f=16, n_b=8, n_0=8, n_test=0), TrainConfig(iterations=5, optimizer='ca-adamw'));"
        "print(repr(h[-1].loss))"
    )
    vals = []
    for pure in ("0", "1"):
        env = dict(os.environ, CAPINN_PURE=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout.strip()))
    assert abs(vals[0] - vals[1]) <= 1e-10 * abs(vals[0])
