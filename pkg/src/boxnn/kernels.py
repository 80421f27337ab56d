"""Batch kernel dispatch: compiled extension when available, NumPy otherwise.

The backend is chosen once at import. Set BOXNN_PURE_PYTHON=1 to force the
NumPy fallback (useful for debugging and for benchmarking the two against
each other). Both backends implement identical contracts; float results may
differ in the last bits because summation order differs.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_np

__all__ = [
    "backend",
    "available_backends",
    "l0_distance_matrix",
    "conical_distance_matrix",
    "train_forward",
    "conical_grad",
]


def _load_compiled():
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


if os.environ.get("BOXNN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_np
else:
    _impl = _load_compiled() or _kernels_np


def backend() -> str:
    """Name of the active backend: 'compiled' or 'numpy'."""
    return "numpy" if _impl is _kernels_np else "compiled"


def available_backends() -> dict:
    """All importable backends, keyed by name."""
    out = {"numpy": _kernels_np}
    compiled = _load_compiled()
    if compiled is not None:
        out["compiled"] = compiled
    return out


def _prep(xs, lower, upper):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    lower = np.ascontiguousarray(lower, dtype=np.float64)
    upper = np.ascontiguousarray(upper, dtype=np.float64)
    if xs.ndim != 2 or lower.ndim != 2 or upper.ndim != 2:
        raise ValueError("xs, lower, upper must be 2-d matrices")
    if lower.shape != upper.shape:
        raise ValueError(f"corner shapes differ: {lower.shape} vs {upper.shape}")
    if xs.shape[1] != lower.shape[1]:
        raise ValueError(f"dimension mismatch: inputs have {xs.shape[1]}, boxes have {lower.shape[1]}")
    return xs, lower, upper


def l0_distance_matrix(xs, lower, upper) -> np.ndarray:
    """(N, M) int64 matrix of outside-coordinate counts."""
    return _impl.l0_distance_matrix(*_prep(xs, lower, upper))


def conical_distance_matrix(xs, lower, upper) -> np.ndarray:
    """(N, M) float64 matrix of summed hinge distances."""
    return _impl.conical_distance_matrix(*_prep(xs, lower, upper))


def train_forward(xs, lower, upper) -> tuple[np.ndarray, np.ndarray]:
    """Both distance matrices in one pass: (l0 int64, conical float64)."""
    return _impl.train_forward(*_prep(xs, lower, upper))


def conical_grad(xs, lower, upper, coef) -> tuple[np.ndarray, np.ndarray]:
    """Per-corner gradient accumulation for coefficient matrix coef (N, M)."""
    xs, lower, upper = _prep(xs, lower, upper)
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    if coef.shape != (xs.shape[0], lower.shape[0]):
        raise ValueError(f"coef must have shape {(xs.shape[0], lower.shape[0])}, got {coef.shape}")
    return _impl.conical_grad(xs, lower, upper, coef)
