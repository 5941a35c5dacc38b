"""Reverse-mode differentiation on an append-only tape.

Every ``Var`` holds a float64 numpy array (a batch of scalars: typically one
entry per collocation point) and records the operation that produced it.
Nodes are appended to their tape in creation order, so parents always
precede children and a single reverse sweep visits each node once.

Operands that are not ``Var`` (floats, arrays) are constants.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import NonFiniteError


class Tape:
    """Append-only record of operations."""

    __slots__ = ("nodes",)

    def __init__(self):
        self.nodes: list[Var] = []

    def leaf(self, value) -> "Var":
        return Var(np.array(value, dtype=np.float64), self, (), (), "leaf")

    def __len__(self):
        return len(self.nodes)

    def backward(self, out: "Var", seed=None) -> list:
        """Accumulate cotangents of ``out`` into a list indexed like ``nodes``.

        Leaves that ``out`` does not depend on get ``None``.
        """
        if out.tape is not self:
            raise ValueError("output was not recorded on this tape")
        grads: list = [None] * len(self.nodes)
        grads[out.index] = np.ones_like(out.value) if seed is None else np.asarray(seed, np.float64)
        for node in reversed(self.nodes[: out.index + 1]):
            g = grads[node.index]
            if g is None or not node.parents:
                continue
            if type(node) is MultiVar:
                contribs = node.vjps[0](g)
            else:
                contribs = node.vjps
            for parent, contrib in zip(node.parents, contribs):
                i = parent.index
                if type(parent) is MultiVar:
                    # contrib is this output's slot number
                    slot = grads[i]
                    if slot is None:
                        slot = grads[i] = [None] * parent.n_out
                    slot[contrib] = g if slot[contrib] is None else slot[contrib] + g
                    continue
                if contribs is node.vjps:
                    contrib = contrib(g)
                elif contrib is None:
                    continue
                if contrib.shape != parent.value.shape:
                    contrib = _unbroadcast(contrib, parent.value.shape)
                if grads[i] is None:
                    grads[i] = contrib
                else:
                    grads[i] = grads[i] + contrib
        return grads

    def first_nonfinite(self):
        """Earliest node whose value is NaN/Inf, or None."""
        for node in self.nodes:
            if node.value is not None and not np.all(np.isfinite(node.value)):
                return node
        return None


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.ndim > len(shape):
        g = g.sum(axis=tuple(range(g.ndim - len(shape))))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _val(x):
    return x.value if isinstance(x, Var) else x


class Var:
    """A recorded array value. Supports arithmetic, tanh/sin/cos/exp, matmul."""

    __slots__ = ("value", "tape", "parents", "vjps", "op", "index")
    __array_ufunc__ = None  # make ndarray <op> Var defer to Var

    def __init__(self, value, tape: Tape, parents: tuple, vjps: tuple, op: str):
        self.value = value
        self.tape = tape
        self.parents = parents
        self.vjps = vjps
        self.op = op
        self.index = len(tape.nodes)
        tape.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def T(self):
        return Var(self.value.T, self.tape, (self,), (lambda g: g.T,), "transpose")

    def __repr__(self):
        return f"Var(op={self.op}, shape={self.value.shape})"

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Var):
            return Var(self.value + other.value, self.tape, (self, other), (_ident, _ident), "add")
        return Var(self.value + other, self.tape, (self,), (_ident,), "add")

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Var):
            return Var(self.value - other.value, self.tape, (self, other), (_ident, np.negative), "sub")
        return Var(self.value - other, self.tape, (self,), (_ident,), "sub")

    def __rsub__(self, other):
        return Var(other - self.value, self.tape, (self,), (np.negative,), "sub")

    def __neg__(self):
        return Var(-self.value, self.tape, (self,), (np.negative,), "neg")

    def __mul__(self, other):
        a = self.value
        if isinstance(other, Var):
            b = other.value
            return Var(a * b, self.tape, (self, other), (lambda g: g * b, lambda g: g * a), "mul")
        return Var(a * other, self.tape, (self,), (lambda g: g * other,), "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        a = self.value
        if isinstance(other, Var):
            b = other.value
            out = a / b
            return Var(out, self.tape, (self, other), (lambda g: g / b, lambda g: -g * out / b), "div")
        return Var(a / other, self.tape, (self,), (lambda g: g / other,), "div")

    def __rtruediv__(self, other):
        b = self.value
        out = other / b
        return Var(out, self.tape, (self,), (lambda g: -g * out / b,), "div")

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("Var supports integer powers only")
        n = int(n)
        a = self.value
        if n == 0:
            return Var(np.ones_like(a), self.tape, (self,), (np.zeros_like,), "powi")
        if n == 1:
            return Var(a.copy(), self.tape, (self,), (_ident,), "powi")
        if n == 2:
            return Var(a * a, self.tape, (self,), (lambda g: 2.0 * g * a,), "powi")
        return Var(a**n, self.tape, (self,), (lambda g: n * g * a ** (n - 1),), "powi")

    def __matmul__(self, other):
        a = self.value
        if isinstance(other, Var):
            b = other.value
            return Var(a @ b, self.tape, (self, other), (lambda g: g @ b.T, lambda g: _mm_wgrad(a, g)), "matmul")
        return Var(a @ other, self.tape, (self,), (lambda g: g @ other.T,), "matmul")

    def __rmatmul__(self, other):
        b = self.value
        return Var(other @ b, self.tape, (self,), (lambda g: _mm_wgrad(other, g),), "matmul")

    def __getitem__(self, idx):
        shape = self.value.shape

        def vjp(g):
            out = np.zeros(shape)
            out[idx] = g
            return out

        return Var(self.value[idx], self.tape, (self,), (vjp,), "getitem")

    # -- elementwise functions -------------------------------------------
    def tanh(self):
        t = np.tanh(self.value)
        return Var(t, self.tape, (self,), (lambda g: g * (1.0 - t * t),), "tanh")

    def sin(self):
        a = self.value
        return Var(np.sin(a), self.tape, (self,), (lambda g: g * np.cos(a),), "sin")

    def cos(self):
        a = self.value
        return Var(np.cos(a), self.tape, (self,), (lambda g: -g * np.sin(a),), "cos")

    def exp(self):
        e = np.exp(self.value)
        return Var(e, self.tape, (self,), (lambda g: g * e,), "exp")

    # -- reductions -------------------------------------------------------
    def sum(self):
        shape = self.value.shape
        return Var(np.sum(self.value), self.tape, (self,), (lambda g: np.broadcast_to(g, shape),), "sum")

    def mean(self):
        shape = self.value.shape
        n = self.value.size
        return Var(np.sum(self.value) / n, self.tape, (self,), (lambda g: np.broadcast_to(g / n, shape),), "mean")


class MultiVar(Var):
    """Hidden node of a fused multi-output operation.

    Its outputs are ordinary ``Var`` children that route their cotangents
    into numbered slots; ``vjps[0]`` maps the slot list to one cotangent
    per parent (``None`` for no contribution).
    """

    __slots__ = ("n_out",)

    def __init__(self, tape, parents, bwd, n_out, op):
        super().__init__(None, tape, parents, (bwd,), op)
        self.n_out = n_out


def fused(inputs, outputs, bwd, op: str):
    """Record a multi-output operation computed outside the tape.

    ``inputs`` are the operands (Var or constant), ``outputs`` the computed
    arrays, and ``bwd(slot_cotangents)`` returns one cotangent per input
    (entries for constants are ignored). Slot cotangents of unused outputs
    are ``None``. Returns Vars for the outputs, or the plain arrays when no
    input is recorded.
    """
    idx = [i for i, x in enumerate(inputs) if isinstance(x, Var)]
    if not idx:
        return list(outputs)
    tape = inputs[idx[0]].tape
    parents = tuple(inputs[i] for i in idx)

    def vjp(slots):
        full = bwd(slots)
        return [full[i] for i in idx]

    node = MultiVar(tape, parents, vjp, len(outputs), op)
    return [Var(v, tape, (node,), (k,), op) for k, v in enumerate(outputs)]


def _ident(g):
    return g


def _mm_wgrad(a, g):
    # d(a @ b)/db with any leading batch dims on a and g folded together
    if a.ndim == 1:
        return np.outer(a, g) if g.ndim == 1 else a[:, None] * g
    return a.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])


def stack(items, axis=-1):
    """Stack a sequence of Vars/arrays along a new axis."""
    vals = [_val(x) for x in items]
    vals = np.broadcast_arrays(*vals)
    out = np.stack(vals, axis=axis)
    vars_ = [(i, x) for i, x in enumerate(items) if isinstance(x, Var)]
    if not vars_:
        return out
    tape = vars_[0][1].tape
    ax = axis if axis >= 0 else out.ndim + axis
    parents = tuple(x for _, x in vars_)
    vjps = tuple((lambda g, i=i: np.take(g, i, axis=ax)) for i, _ in vars_)
    return Var(out, tape, parents, vjps, "stack")


def tanh(x):
    return x.tanh() if hasattr(x, "tanh") else np.tanh(x)


def sin(x):
    return x.sin() if hasattr(x, "sin") else np.sin(x)


def cos(x):
    return x.cos() if hasattr(x, "cos") else np.cos(x)


def exp(x):
    return x.exp() if hasattr(x, "exp") else np.exp(x)


def value_of(x):
    """Strip recording: Var -> array, anything else unchanged."""
    return x.value if isinstance(x, Var) else x


def grad(f, theta: dict, *args, **kwargs):
    """Evaluate ``f(theta_vars, ...)`` on a fresh tape and differentiate it.

    ``theta`` maps names to arrays. ``f`` must return a scalar ``Var`` (or a
    tuple whose first element is one; the rest is passed through).
    Returns ``(value, grads, extra)`` where ``grads`` maps the same names to
    arrays shaped like ``theta``.
    """
    tape = Tape()
    leaves = {k: tape.leaf(v) for k, v in theta.items()}
    res = f(leaves, *args, **kwargs)
    out, extra = (res[0], res[1:]) if isinstance(res, tuple) else (res, ())
    if not isinstance(out, Var):
        raise TypeError("objective does not depend on the parameters")
    if out.value.size != 1:
        raise ValueError("grad needs a scalar objective")
    value = float(out.value)
    if not math.isfinite(value):
        bad = tape.first_nonfinite()
        op = bad.op if bad is not None else None
        raise NonFiniteError(f"non-finite value in forward pass (first at op '{op}')", op=op)
    gl = tape.backward(out)
    grads = {}
    for k, leaf in leaves.items():
        g = gl[leaf.index]
        grads[k] = np.zeros_like(leaf.value) if g is None else np.array(g, dtype=np.float64)
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            op = _first_nonfinite_grad(tape, gl)
            raise NonFiniteError(f"non-finite value in backward pass (first at op '{op}')", op=op)
    return value, grads, extra


def _first_nonfinite_grad(tape, gl):
    for node in reversed(tape.nodes):
        g = gl[node.index]
        if g is None or type(node) is MultiVar:
            continue
        if not np.all(np.isfinite(g)):
            return node.op
    return None
