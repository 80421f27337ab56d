"""Exact nearest-box prediction and the margin-based sparse-robustness certificate.

For an input x, let d1 be the distance to the nearest box and d2 the distance
to the nearest box carrying a different label than the prediction. Editing k
coordinates changes any box distance by at most k, so as long as
2k < d2 - d1 the nearest-differing-label box cannot overtake the winner and
the prediction is unchanged. The largest certified integer budget is
therefore floor((d2 - d1 - 1) / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import BoxModel, _as_vector

__all__ = ["CertResult", "CertBatch", "predict", "cert", "predict_batch", "cert_batch"]

# rows per kernel call when sweeping large datasets
_BATCH_ROWS = 2048


@dataclass(frozen=True)
class CertResult:
    """Certificate for a single input.

    d2 and margin are math.inf when no box carries a differing label (the
    prediction is then constant everywhere and the radius is the full
    dimension).
    """

    predicted_label: int
    d1: int
    d2: int | float
    margin: int | float
    certified_radius: int


@dataclass(frozen=True)
class CertBatch:
    """Column-wise certificates for a batch of inputs (d2/margin as float64
    arrays so the no-differing-label sentinel can be +inf)."""

    predicted_labels: np.ndarray  # (N,) int64
    d1: np.ndarray  # (N,) int64
    d2: np.ndarray  # (N,) float64, +inf sentinel
    margin: np.ndarray  # (N,) float64
    certified_radius: np.ndarray  # (N,) int64


def _radius_from_margin(margin, dim: int):
    """Largest integer k with k < margin / 2, capped to [0, dim]."""
    if math.isinf(margin):
        return dim
    return min(dim, max(0, (int(margin) - 1) // 2))


def predict(model: BoxModel, x) -> int:
    """Label of the box at minimum outside-coordinate distance.

    Ties resolve to the lowest box index in the model's stored order.
    """
    x = _as_vector(x, model.dim)
    dists = kernels.l0_distance_matrix(x[None, :], model.lower, model.upper)[0]
    return int(model.labels[int(np.argmin(dists))])


def cert(model: BoxModel, x) -> CertResult:
    """Prediction plus the certified sparse-perturbation radius at x."""
    x = _as_vector(x, model.dim)
    dists = kernels.l0_distance_matrix(x[None, :], model.lower, model.upper)[0]
    star = int(np.argmin(dists))
    label = int(model.labels[star])
    d1 = int(dists[star])
    other = dists[model.labels != label]
    if other.size:
        d2: int | float = int(other.min())
    else:
        d2 = math.inf
    margin = d2 - d1
    return CertResult(
        predicted_label=label,
        d1=d1,
        d2=d2,
        margin=margin,
        certified_radius=_radius_from_margin(margin, model.dim),
    )


def predict_batch(model: BoxModel, xs) -> np.ndarray:
    """Vectorized predict over the rows of xs."""
    return cert_batch(model, xs).predicted_labels


def cert_batch(model: BoxModel, xs) -> CertBatch:
    """Vectorized cert over the rows of xs; processed in fixed-size chunks."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != model.dim:
        raise ValueError(f"xs must be (N, {model.dim}), got {xs.shape}")
    n_rows = xs.shape[0]
    pred = np.empty(n_rows, dtype=np.int64)
    d1 = np.empty(n_rows, dtype=np.int64)
    d2 = np.empty(n_rows, dtype=np.float64)
    multi_label = np.unique(model.labels).size > 1
    for start in range(0, n_rows, _BATCH_ROWS):
        blk = slice(start, min(start + _BATCH_ROWS, n_rows))
        dists = kernels.l0_distance_matrix(xs[blk], model.lower, model.upper)
        star = dists.argmin(axis=1)
        rows = np.arange(dists.shape[0])
        pred[blk] = model.labels[star]
        d1[blk] = dists[rows, star]
        if multi_label:
            differs = model.labels[None, :] != pred[blk][:, None]
            d2[blk] = np.where(differs, dists, np.iinfo(np.int64).max).min(axis=1)
        else:
            d2[blk] = np.inf
    margin = d2 - d1
    radius = np.where(
        np.isinf(margin),
        model.dim,
        np.minimum(model.dim, np.maximum(0, (np.nan_to_num(margin, posinf=0).astype(np.int64) - 1) // 2)),
    ).astype(np.int64)
    return CertBatch(predicted_labels=pred, d1=d1, d2=d2, margin=margin, certified_radius=radius)
