"""Gradient-based learning of box models against a relaxed certificate objective.

The hard certificate (difference of two integer minima) has zero gradient
almost everywhere, so training substitutes three relaxations:

  * the outside-coordinate count becomes the hinge (conical) distance,
  * each hard min over boxes becomes a temperature-tau soft min,
  * the resulting relaxed margin is clipped so a few far boxes cannot
    dominate the objective (zero subgradient on the clipped branch).

The correct/incorrect sign of each sample and the identity of the predicted
label are taken from the exact classifier each step and treated as constants;
only box corners receive gradients, labels stay fixed at their initial
values. Plain mini-batch gradient descent, single-threaded and bit-for-bit
reproducible for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .core import BoxModel, _as_vector, soft_min
from .data import Dataset

__all__ = [
    "TrainConfig",
    "LossReport",
    "init_model",
    "relaxed_certificate",
    "loss",
    "train",
]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for box training; all runs are deterministic in seed."""

    num_boxes: int = 500
    tau: float = 1.0
    clip: float = 50.0
    lr: float = 0.05
    epochs: int = 30
    batch_size: int = 256
    seed: int = 0
    init_halfwidth: float = 0.1

    def __post_init__(self):
        if self.num_boxes < 1:
            raise ValueError("num_boxes must be >= 1")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValueError("tau must be finite and >= 0")
        if not (math.isfinite(self.clip) and self.clip > 0):
            raise ValueError("clip must be > 0")
        # lr 0 / epochs 0 are legal no-ops, handy for reproducibility checks
        if not (math.isfinite(self.lr) and self.lr >= 0):
            raise ValueError("lr must be finite and >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (math.isfinite(self.init_halfwidth) and self.init_halfwidth >= 0):
            raise ValueError("init_halfwidth must be finite and >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f: d[f] for f in cls.__dataclass_fields__ if f in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True)
class LossReport:
    loss: float
    accuracy: float
    mean_relaxed_certificate: float


def init_model(dataset: Dataset, config: TrainConfig) -> BoxModel:
    """Boxes of halfwidth h centered on a uniform sample of training points.

    Draws num_boxes points without replacement using config.seed; each point
    (x, y) becomes the box [x - h, x + h] with label y.
    """
    if config.num_boxes > dataset.num_samples:
        raise ValueError(
            f"cannot draw {config.num_boxes} boxes from {dataset.num_samples} points"
        )
    rng = np.random.default_rng(config.seed)
    idx = rng.choice(dataset.num_samples, size=config.num_boxes, replace=False)
    h = config.init_halfwidth
    return BoxModel(
        lower=dataset.xs[idx] - h,
        upper=dataset.xs[idx] + h,
        labels=dataset.ys[idx],
        num_classes=dataset.num_classes,
    )


def relaxed_certificate(model: BoxModel, x, y_pred: int, tau: float, clip: float) -> float:
    """Clipped soft margin at x: min(softmin_other - softmin_all, clip).

    softmin_all runs over the hinge distances to every box, softmin_other
    over boxes whose label differs from y_pred. Positive when x sits closer
    to y_pred's boxes than to the rest; larger is better.
    """
    x = _as_vector(x, model.dim)
    con = kernels.conical_distance_matrix(x[None, :], model.lower, model.upper)[0]
    differs = model.labels != y_pred
    if not differs.any():
        raise ValueError("relaxed certificate needs at least one box with a differing label")
    return min(soft_min(con[differs], tau) - soft_min(con, tau), clip)


def _softmin_rows(values: np.ndarray, mask: np.ndarray | None, tau: float):
    """Row-wise soft min and its derivative over an optional column mask.

    Returns (sm (N,), grad (N, M)) with grad_m = w_m * (1 - tau * (c_m - sm)),
    the quotient-rule derivative of sum(c w)/sum(w); zero off-mask.
    """
    if mask is None:
        shift = values.min(axis=1, keepdims=True)
        arg = values - shift
    else:
        shift = np.where(mask, values, np.inf).min(axis=1, keepdims=True)
        arg = np.where(mask, values - shift, 0.0)  # off-mask left at 0 to avoid overflow
    w = np.exp(-tau * arg)
    if mask is not None:
        w = np.where(mask, w, 0.0)
    z = w.sum(axis=1, keepdims=True)
    sm = (values * w).sum(axis=1, keepdims=True) / z
    grad = (w / z) * (1.0 - tau * (values - sm))
    return sm[:, 0], grad


def _forward(lower, upper, labels, xs, ys, tau, clip, want_grad: bool):
    """Shared batch forward pass; returns (report, coef or None).

    coef[i, m] is the loss derivative w.r.t. the hinge distance from sample i
    to box m, ready for the per-corner accumulation kernel.
    """
    n_rows = xs.shape[0]
    dist, con = kernels.train_forward(xs, lower, upper)
    star = dist.argmin(axis=1)
    pred = labels[star]
    sign = np.where(pred == ys, 1.0, -1.0)

    differs = labels[None, :] != pred[:, None]
    if not differs.any(axis=1).all():
        raise ValueError("training requires boxes of at least two distinct labels")
    sm_all, g_all = _softmin_rows(con, None, tau)
    sm_other, g_other = _softmin_rows(con, differs, tau)
    raw = sm_other - sm_all
    cert = np.minimum(raw, clip)

    # mean() uses pairwise summation, keeping the loss insensitive to batch order
    report = LossReport(
        loss=float(-np.mean(sign * cert)),
        accuracy=float(np.mean(pred == ys)),
        mean_relaxed_certificate=float(np.mean(cert)),
    )
    if not want_grad:
        return report, None
    coef = (-(sign / n_rows))[:, None] * (g_other - g_all)
    coef[raw >= clip] = 0.0
    return report, coef


def loss(model: BoxModel, xs, ys, config: TrainConfig) -> LossReport:
    """Mean of -sign * clipped relaxed certificate over the batch.

    sign is +1 for correctly classified samples and -1 otherwise, so gradient
    descent on this value pushes correct samples' certificates up and
    misclassified samples' certificates further down.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.int64)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("batch must be a non-empty (N, dim) matrix")
    if ys.shape != (xs.shape[0],):
        raise ValueError("ys must match the batch rows")
    report, _ = _forward(model.lower, model.upper, model.labels, xs, ys, config.tau, config.clip, False)
    return report


def _loss_and_grad(lower, upper, labels, xs, ys, tau, clip):
    report, coef = _forward(lower, upper, labels, xs, ys, tau, clip, True)
    dlo, dhi = kernels.conical_grad(xs, lower, upper, coef)
    return report, dlo, dhi


def train(dataset: Dataset, config: TrainConfig) -> tuple[BoxModel, list[LossReport]]:
    """Mini-batch gradient descent from the sampled-box initialization.

    Labels never change; after every step any inverted interval (lower >
    upper) is collapsed to its midpoint. Returns the final model and one
    sample-weighted LossReport per epoch.
    """
    model = init_model(dataset, config)
    lower = model.lower.copy()
    upper = model.upper.copy()
    labels = model.labels
    xs, ys = dataset.xs, dataset.ys
    n_rows = dataset.num_samples

    # separate stream so batch order is independent of the init draw
    shuffle_rng = np.random.default_rng([config.seed, 1])
    history: list[LossReport] = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n_rows)
        tot_loss = tot_acc = tot_cert = 0.0
        for start in range(0, n_rows, config.batch_size):
            batch = order[start : start + config.batch_size]
            report, dlo, dhi = _loss_and_grad(
                lower, upper, labels, xs[batch], ys[batch], config.tau, config.clip
            )
            if not math.isfinite(report.loss):
                raise RuntimeError(
                    f"non-finite loss {report.loss} at epoch {epoch}, batch offset {start}; "
                    "lower the learning rate or check the input data"
                )
            lower -= config.lr * dlo
            upper -= config.lr * dhi
            bad = lower > upper
            if bad.any():
                mid = 0.5 * (lower + upper)
                lower[bad] = mid[bad]
                upper[bad] = mid[bad]
            weight = batch.size
            tot_loss += report.loss * weight
            tot_acc += report.accuracy * weight
            tot_cert += report.mean_relaxed_certificate * weight
        history.append(
            LossReport(
                loss=tot_loss / n_rows,
                accuracy=tot_acc / n_rows,
                mean_relaxed_certificate=tot_cert / n_rows,
            )
        )
    final = BoxModel(lower=lower, upper=upper, labels=labels, num_classes=dataset.num_classes)
    return final, history
