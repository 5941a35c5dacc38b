"""Batch evaluation of input derivatives of a jet-evaluable function.

``fn`` takes a list of per-axis inputs and returns a list of output
components, e.g. ``lambda xs: forward(spec, theta, xs)``. All pure
derivatives are computed in one broadcast pass: every coefficient of
order >= 1 carries a leading "direction" axis, one slot per seed direction,
while the value coefficient is shared.

Mixed partials of the forms (1,1) and (2,2) in two axes are recovered in the
same pass by polarization along the diagonals e_i + e_j and e_i - e_j:

    D2(+) - D2(-) = 4 u_ij
    D4(+) + D4(-) = 2 u_iiii + 12 u_iijj + 2 u_jjjj

which avoids a second, nested-jet pass over the network. Any other mixed
multi-index falls back to nested jets, one pass per group of axes.
"""
from __future__ import annotations

import numpy as np

from ..autodiff import MAX_DEGREE, Jet, coef, nested_seed
from ..errors import UnsupportedOrderError


def _pure_axis(idx):
    nz = [(i, o) for i, o in enumerate(idx) if o]
    return nz[0] if len(nz) == 1 else None


def collect(fn, X: np.ndarray, requests) -> dict:
    """Map each requested multi-index to a list of per-output derivative arrays.

    ``X`` has shape (points, axes). The all-zero multi-index (values) is
    always included.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    zero = (0,) * n
    requests = {tuple(int(o) for o in r) for r in requests}
    for r in requests:
        if len(r) != n:
            raise ValueError(f"multi-index {r} does not match {n} input axes")
        if sum(r) > MAX_DEGREE:
            raise UnsupportedOrderError(f"derivative order {sum(r)} > {MAX_DEGREE}")
    pure = {}
    polar = []
    mixed = []
    for r in requests:
        if r == zero:
            continue
        pa = _pure_axis(r)
        if pa is not None:
            pure[pa[0]] = max(pure.get(pa[0], 0), pa[1])
            continue
        nz = [(i, o) for i, o in enumerate(r) if o]
        if len(nz) == 2 and nz[0][1] == nz[1][1] and nz[0][1] in (1, 2):
            polar.append(r)
            o = nz[0][1]
            for i, _ in nz:
                pure[i] = max(pure.get(i, 0), 2 * o)
        else:
            mixed.append(r)

    out = {}
    cols = [X[:, i] for i in range(n)]
    B = X.shape[0]
    if pure:
        axes = sorted(pure)
        dirs = [np.eye(n)[i] for i in axes]
        diag = {}
        for r in polar:
            i, j = (k for k, o in enumerate(r) if o)
            if (i, j) not in diag:
                diag[(i, j)] = len(dirs)
                e = np.zeros(n)
                e[i] = e[j] = 1.0
                dirs.append(e.copy())
                e[j] = -1.0
                dirs.append(e)
        K = max(pure.values())
        dirs = np.array(dirs)
        xs = []
        for i in range(n):
            if dirs[:, i].any():
                seed = np.repeat(dirs[:, i : i + 1], B, axis=1)
                xs.append(Jet((cols[i], seed) + (0.0,) * (K - 1)))
            else:
                xs.append(Jet.const(cols[i], K))
        ys = fn(xs)
        out[zero] = [coef(y, 0) for y in ys]
        for r in requests:
            pa = _pure_axis(r)
            if pa is not None:
                out[r] = [_slot(coef(y, pa[1]), axes.index(pa[0]), B) for y in ys]
        for r in polar:
            i, j = (k for k, o in enumerate(r) if o)
            p = diag[(i, j)]
            o = r[i]
            vals = []
            for y in ys:
                c = coef(y, 2 * o)
                plus, minus = _slot(c, p, B), _slot(c, p + 1, B)
                if o == 1:
                    vals.append((plus - minus) * 0.25)
                else:
                    ui = _slot(c, axes.index(i), B)
                    uj = _slot(c, axes.index(j), B)
                    vals.append((plus + minus - 2.0 * ui - 2.0 * uj) * (1.0 / 12.0))
            out[r] = vals
    else:
        out[zero] = list(fn(cols))

    groups: dict[tuple, dict] = {}
    for r in mixed:
        ax = tuple(i for i, o in enumerate(r) if o)
        g = groups.setdefault(ax, {})
        for i in ax:
            g[i] = max(g.get(i, 0), r[i])
    for ax, degs in groups.items():
        levels = [degs[i] for i in ax]
        if sum(levels) > MAX_DEGREE:
            raise UnsupportedOrderError(f"mixed group {ax} needs order {sum(levels)} > {MAX_DEGREE}")
        xs = [nested_seed(cols[i], levels, ax.index(i) if i in ax else None) for i in range(n)]
        ys = fn(xs)
        for r in mixed:
            if tuple(i for i, o in enumerate(r) if o) != ax:
                continue
            vals = []
            for y in ys:
                for i in ax:
                    y = coef(y, r[i])
                vals.append(_dense(y, X.shape[0]))
            out[r] = vals
    return out


def _slot(c, d, B):
    if type(c) is float:
        return np.full(B, c)
    if np.ndim(c.value if hasattr(c, "value") else c) == 1:
        return c
    return c[d]


def _dense(c, B):
    return np.full(B, c) if type(c) is float else c
