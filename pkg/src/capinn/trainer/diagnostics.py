"""Secant prediction diagnostics."""
from __future__ import annotations

import numpy as np

R_GUARD = 1e-30


def estimate_tau(d_next, s) -> float:
    """Least-squares coefficient of ``d_next`` on ``s`` (0 when ``s`` vanishes)."""
    ss = float(np.dot(s, s))
    if ss == 0.0:
        return 0.0
    return float(np.dot(d_next, s)) / ss


def secant_error_ratio(g_next, g, y, tau) -> float:
    """|g_next - (g + tau y)| / |g_next - g| with the denominator floored at 1e-30."""
    g_next, g, y = (np.asarray(a, dtype=np.float64) for a in (g_next, g, y))
    if not g_next.shape == g.shape == y.shape:
        raise ValueError("secant_error_ratio needs equal shapes")
    num = np.linalg.norm(g_next - (g + tau * y))
    den = np.linalg.norm(g_next - g)
    return float(num / max(den, R_GUARD))


def ratio_reliable(g_next, g) -> bool:
    return float(np.linalg.norm(np.asarray(g_next) - np.asarray(g))) >= R_GUARD


class SecantTracker:
    """Computes R_k one step in arrears from the stream of (theta_k, g_k).

    ``push`` returns R for the previous iteration once it is computable,
    as ``(R, reliable)``, else None.
    """

    def __init__(self):
        self.hist = []  # last three (theta, g) pairs

    def push(self, theta: np.ndarray, g: np.ndarray):
        self.hist.append((theta, g))
        if len(self.hist) > 3:
            self.hist.pop(0)
        if len(self.hist) < 3:
            return None
        (t0, g0), (t1, g1), (t2, g2) = self.hist
        s = t1 - t0
        y = g1 - g0
        tau = estimate_tau(t2 - t1, s)
        reliable = ratio_reliable(g2, g1) and float(np.dot(s, s)) > 0.0
        return secant_error_ratio(g2, g1, y, tau), reliable
