"""Truncated Taylor arithmetic in one seed direction.

A ``Jet`` of degree K carries the raw derivatives ``(f, f', ..., f^(K))`` of
some quantity along a seed direction (no 1/k! normalization). Coefficients
may be floats, numpy arrays, tape ``Var`` nodes, or Jets themselves; the
last case gives mixed partials by nesting one level per variable.

The float ``0.0`` is treated as a structural zero: products with it are
skipped, which keeps seeded inputs cheap.
"""
from __future__ import annotations

from math import comb

import numpy as np

from ..errors import DimensionError, SingularPointError, UnsupportedOrderError
from .. import kernels
from . import tape as _t

MAX_DEGREE = 4


def _is_zero(x) -> bool:
    return type(x) is float and x == 0.0


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return a + b


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return 0.0
    return a * b


def _scale(c, x):
    # constant scalar c times x
    if _is_zero(x):
        return 0.0
    return x if c == 1 else c * x


def _sum(terms):
    out = 0.0
    for t in terms:
        out = _add(out, t)
    return out


class Jet:
    __slots__ = ("c",)
    __array_ufunc__ = None

    def __init__(self, coeffs):
        coeffs = tuple(coeffs)
        if not 1 <= len(coeffs) <= MAX_DEGREE + 1:
            raise UnsupportedOrderError(f"jet degree must be in 0..{MAX_DEGREE}, got {len(coeffs) - 1}")
        self.c = coeffs

    @classmethod
    def seed(cls, x0, degree: int, direction=1.0):
        """Independent variable ``x0`` moving along ``direction``."""
        return cls((x0, direction) + (0.0,) * (degree - 1)) if degree >= 1 else cls((x0,))

    @classmethod
    def const(cls, x0, degree: int):
        return cls((x0,) + (0.0,) * degree)

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def __repr__(self):
        return f"Jet(degree={self.degree}, c0={self.c[0]!r})"

    def _check(self, other: "Jet"):
        if other.degree != self.degree:
            raise DimensionError(f"jet degree mismatch: {self.degree} vs {other.degree}")

    # -- linear ops -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet(_add(a, b) for a, b in zip(self.c, other.c))
        return Jet((_add(self.c[0], other),) + self.c[1:])

    __radd__ = __add__

    def __neg__(self):
        return Jet(_scale(-1.0, a) for a in self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __matmul__(self, w):
        return Jet(0.0 if _is_zero(a) else a @ w for a in self.c)

    def __getitem__(self, idx):
        return Jet(a if _is_zero(a) else a[idx] for a in self.c)

    # -- products ---------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            f, g = self.c, other.c
            out = []
            for k in range(len(f)):
                out.append(_sum(_scale(comb(k, j), _mul(f[j], g[k - j])) for j in range(k + 1)))
            return Jet(out)
        return Jet(_mul(a, other) for a in self.c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            _check_nonzero(other)
            return Jet(0.0 if _is_zero(a) else a / other for a in self.c)
        self._check(other)
        f, g = self.c, other.c
        g0 = g[0]
        _check_nonzero(g0)
        h = []
        for k in range(len(f)):
            acc = f[k]
            for j in range(k):
                term = _scale(comb(k, j), _mul(h[j], g[k - j]))
                if not _is_zero(term):
                    acc = _add(acc, -term)
            h.append(0.0 if _is_zero(acc) else acc / g0)
        return Jet(h)

    def __rtruediv__(self, other):
        return Jet.const(other, self.degree) / self

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("Jet supports integer powers only")
        n = int(n)
        if n == 0:
            return Jet.const(1.0, self.degree)
        if n == 1:
            return self
        if n == 2:
            return self * self
        x0 = self.c[0]
        if n < 0:
            _check_nonzero(x0)
        phis = []
        for k in range(self.degree + 1):
            if n >= 0 and k > n:
                phis.append(0.0)
                continue
            fall = 1
            for i in range(k):
                fall *= n - i
            p = n - k
            phis.append(_scale(fall, _powi(x0, p)))
        return self._compose(phis)

    # -- elementwise functions via Faa di Bruno ----------------------------
    def tanh(self):
        K = self.degree
        if K >= 1:
            fused = _fused_tanh(self.c)
            if fused is not None:
                return Jet(fused)
        t = _t.tanh(self.c[0])
        if K == 0:
            return Jet((t,))
        t2 = t * t
        s = 1.0 - t2  # tanh'
        phis = [t, s]
        if K >= 2:
            phis.append(-2.0 * (t * s))
        if K >= 3:
            phis.append(s * (6.0 * t2 - 2.0))
        if K >= 4:
            phis.append((t * s) * (16.0 - 24.0 * t2))
        return self._compose(phis)

    def sin(self):
        s, c = _t.sin(self.c[0]), _t.cos(self.c[0])
        return self._compose([s, c, -s, -c, s][: self.degree + 1])

    def cos(self):
        s, c = _t.sin(self.c[0]), _t.cos(self.c[0])
        return self._compose([c, -s, -c, s, c][: self.degree + 1])

    def exp(self):
        e = _t.exp(self.c[0])
        return self._compose([e] * (self.degree + 1))

    def _compose(self, phis):
        """Raw derivatives of phi(x) given phi^(k)(x0) for k = 0..K."""
        x = self.c
        K = self.degree
        out = [phis[0]]
        if K >= 1:
            x1 = x[1]
            out.append(_mul(phis[1], x1))
        if K >= 2:
            x2 = x[2]
            x1sq = _mul(x1, x1)
            out.append(_add(_mul(phis[1], x2), _mul(phis[2], x1sq)))
        if K >= 3:
            x3 = x[3]
            x1x2 = _mul(x1, x2)
            out.append(_sum([_mul(phis[1], x3), _mul(phis[2], _scale(3.0, x1x2)), _mul(phis[3], _mul(x1sq, x1))]))
        if K >= 4:
            x4 = x[4]
            inner2 = _add(_scale(4.0, _mul(x1, x3)), _scale(3.0, _mul(x2, x2)))
            out.append(
                _sum(
                    [
                        _mul(phis[1], x4),
                        _mul(phis[2], inner2),
                        _mul(phis[3], _scale(6.0, _mul(x1sq, x2))),
                        _mul(phis[4], _mul(x1sq, x1sq)),
                    ]
                )
            )
        return Jet(out)


def _fused_tanh(c):
    """Single-kernel tanh for array/Var coefficients in direction-major layout.

    Coefficients of order >= 1 must share one shape, either that of ``c[0]``
    or ``(D,) + c[0].shape``. Returns None when that layout does not apply.
    """
    v0 = _t.value_of(c[0])
    if not isinstance(v0, np.ndarray) or v0.ndim == 0 or _is_zero(c[1]):
        return None
    shape = None
    for x in c[1:]:
        if _is_zero(x):
            continue
        if isinstance(x, Jet):
            return None
        sh = np.shape(_t.value_of(x))
        if shape is None:
            shape = sh
        elif sh != shape:
            return None
    S = v0.shape
    if shape == S:
        D = 1
    elif shape[1:] == S:
        D = shape[0]
    else:
        return None
    M = v0.size
    x0 = np.ascontiguousarray(v0).reshape(M)
    xs = [np.zeros((D, M)) if _is_zero(x) else np.ascontiguousarray(_t.value_of(x)).reshape(D, M) for x in c[1:]]
    t, ys = kernels.tanh_jet_fwd(x0, xs)

    def bwd(slots):
        g0 = None if slots[0] is None else np.ascontiguousarray(slots[0]).reshape(M)
        gs = [None if g is None else np.ascontiguousarray(g).reshape(D, M) for g in slots[1:]]
        gx0, gxs = kernels.tanh_jet_bwd(t, xs, g0, gs)
        return [gx0.reshape(S)] + [g.reshape(shape) for g in gxs]

    return _t.fused(list(c), [t.reshape(S)] + [y.reshape(shape) for y in ys], bwd, "tanh_jet")


def _powi(x, p: int):
    if p == 0:
        return 1.0
    if isinstance(x, (Jet, _t.Var)):
        return x**p
    return np.power(x, float(p)) if isinstance(x, np.ndarray) else float(x) ** p


def _check_nonzero(x):
    if isinstance(x, Jet):
        _check_nonzero(x.c[0])
        return
    v = _t.value_of(x)
    if np.any(np.asarray(v) == 0.0):
        raise SingularPointError("jet division by a series with zero value")


def coef(x, k: int):
    """k-th coefficient of a Jet; constants have zero higher coefficients."""
    if isinstance(x, Jet):
        return x.c[k] if k <= x.degree else 0.0
    return x if k == 0 else 0.0


def stack(items, axis=-1):
    """Stack Jets / Vars / arrays along a new trailing axis, coefficient-wise."""
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        return _t.stack(items, axis=axis)
    K = jets[0].degree
    for j in jets:
        jets[0]._check(j)
    out = []
    for k in range(K + 1):
        col = [coef(x, k) for x in items]
        nz = [c for c in col if not _is_zero(c)]
        if not nz:
            out.append(0.0)
            continue
        if any(isinstance(c, Jet) for c in nz):
            out.append(stack(col, axis=axis))
        else:
            shape = np.broadcast_shapes(*(np.shape(_t.value_of(c)) for c in nz))
            out.append(_t.stack([np.zeros(shape) if _is_zero(c) else c for c in col], axis=axis))
    return Jet(out)


def jet_eval(f, x0, degree: int) -> Jet:
    """Derivatives ``d^j f / dx^j`` at ``x0`` for ``j = 0..degree``."""
    if not 0 <= degree <= MAX_DEGREE:
        raise UnsupportedOrderError(f"degree must be in 0..{MAX_DEGREE}")
    y = f(Jet.seed(x0, degree))
    return y if isinstance(y, Jet) else Jet.const(y, degree)


def mixed_partial(f, point, orders):
    """Pure or mixed partial derivative of ``f(*point)`` via nested jets.

    ``orders[i]`` is the differentiation order in variable ``i``. One jet
    level is used per variable with a nonzero order (outermost first).
    """
    point = list(point)
    orders = [int(o) for o in orders]
    if len(orders) != len(point):
        raise DimensionError("orders and point must have the same length")
    if any(o < 0 for o in orders):
        raise ValueError("orders must be nonnegative")
    if sum(orders) > MAX_DEGREE or any(o > MAX_DEGREE for o in orders):
        raise UnsupportedOrderError(f"total derivative order {sum(orders)} exceeds {MAX_DEGREE}")
    active = [i for i, o in enumerate(orders) if o > 0]
    levels = [orders[i] for i in active]
    args = [nested_seed(point[i], levels, active.index(i) if i in active else None) for i in range(len(point))]
    y = f(*args)
    for o in levels:
        y = coef(y, o)
    return y


def nested_seed(x0, degrees, seed_level):
    """Represent a variable in a nest of jets with the given per-level degrees.

    ``seed_level`` is the level along which this variable moves (None: it is
    held fixed at every level).
    """
    if not degrees:
        return x0
    inner = nested_seed(x0, degrees[1:], None if seed_level is None else seed_level - 1)
    K = degrees[0]
    if seed_level == 0:
        return Jet((inner, 1.0) + (0.0,) * (K - 1))
    return Jet((inner,) + (0.0,) * K)
