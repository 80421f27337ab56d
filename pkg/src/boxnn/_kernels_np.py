"""NumPy implementations of the batch kernels.

Same contracts as the compiled module; used as the fallback backend. Work is
chunked over input rows so the (rows, boxes, dim) broadcast temporaries stay
within a fixed memory budget.
"""

from __future__ import annotations

import numpy as np

# cap on elements per (rows, boxes, dim) temporary (~128 MiB of float64)
_CHUNK_ELEMS = 1 << 24


def _row_blocks(num_rows: int, num_boxes: int, dim: int):
    step = max(1, _CHUNK_ELEMS // max(1, num_boxes * dim))
    for start in range(0, num_rows, step):
        yield slice(start, min(start + step, num_rows))


def l0_distance_matrix(xs, lower, upper):
    out = np.empty((xs.shape[0], lower.shape[0]), dtype=np.int64)
    for blk in _row_blocks(xs.shape[0], lower.shape[0], xs.shape[1]):
        x = xs[blk][:, None, :]
        outside = (x < lower[None, :, :]) | (x > upper[None, :, :])
        out[blk] = outside.sum(axis=-1)
    return out


def conical_distance_matrix(xs, lower, upper):
    out = np.empty((xs.shape[0], lower.shape[0]), dtype=np.float64)
    for blk in _row_blocks(xs.shape[0], lower.shape[0], xs.shape[1]):
        x = xs[blk][:, None, :]
        below = np.maximum(lower[None, :, :] - x, 0.0)
        above = np.maximum(x - upper[None, :, :], 0.0)
        out[blk] = below.sum(axis=-1) + above.sum(axis=-1)
    return out


def train_forward(xs, lower, upper):
    dist = np.empty((xs.shape[0], lower.shape[0]), dtype=np.int64)
    conical = np.empty((xs.shape[0], lower.shape[0]), dtype=np.float64)
    for blk in _row_blocks(xs.shape[0], lower.shape[0], xs.shape[1]):
        x = xs[blk][:, None, :]
        below = lower[None, :, :] - x
        above = x - upper[None, :, :]
        dist[blk] = ((below > 0.0) | (above > 0.0)).sum(axis=-1)
        conical[blk] = np.maximum(below, 0.0).sum(axis=-1) + np.maximum(above, 0.0).sum(axis=-1)
    return dist, conical


def conical_grad(xs, lower, upper, coef):
    dlo = np.zeros_like(lower)
    dhi = np.zeros_like(upper)
    for m in range(lower.shape[0]):
        c = coef[:, m]
        nz = c != 0.0
        if not nz.any():
            continue
        x = xs[nz]
        cn = c[nz]
        dlo[m] = cn @ (x < lower[m])
        dhi[m] = -(cn @ (x > upper[m]))
    return dlo, dhi
