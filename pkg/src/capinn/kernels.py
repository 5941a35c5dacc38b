"""Selects the compiled kernel module when available.

Set ``CAPINN_PURE=1`` to force the numpy fallback (used by the benchmark and
the parity tests).
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback
if os.environ.get("CAPINN_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback

jacobi_sweeps = _impl.jacobi_sweeps
tanh_jet_fwd = _impl.tanh_jet_fwd
tanh_jet_bwd = _impl.tanh_jet_bwd
