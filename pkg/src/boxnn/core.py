"""Axis-aligned box geometry and the relaxation primitives built on it.

A box is the set {x : lower <= x <= upper} with closed per-coordinate
intervals; a model is an ordered list of labeled boxes. Everything here is a
pure function of immutable inputs and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoxRegion",
    "BoxModel",
    "box_l0_distance",
    "conical_distance",
    "soft_min",
]


def _as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    return arr


@dataclass(frozen=True)
class BoxRegion:
    """One labeled axis-aligned box {x : lower <= x <= upper}.

    Intervals are closed: a coordinate sitting exactly on a face counts as
    inside. Corners may extend outside [0, 1]^n; only inputs are restricted
    to the unit cube, not the boxes.
    """

    lower: np.ndarray
    upper: np.ndarray
    label: int

    def __post_init__(self):
        lower = _as_vector(self.lower, name="lower")
        upper = _as_vector(self.upper, lower.shape[0], name="upper")
        if lower.shape[0] < 1:
            raise ValueError("box must have dimension >= 1")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("box corners must be finite")
        if np.any(lower > upper):
            raise ValueError("lower corner exceeds upper corner")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "label", int(self.label))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x) -> bool:
        x = _as_vector(x, self.dim)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))


@dataclass
class BoxModel:
    """Ordered collection of labeled boxes: the classifier parameters.

    Stored as packed (M, n) corner matrices plus an (M,) label vector so the
    batch kernels can run over them directly. Box order is part of the model:
    distance ties resolve to the lowest index.
    """

    lower: np.ndarray  # (M, n) lower corners
    upper: np.ndarray  # (M, n) upper corners
    labels: np.ndarray  # (M,) int64 in [0, num_classes)
    num_classes: int

    def __post_init__(self):
        lower = np.ascontiguousarray(self.lower, dtype=np.float64)
        upper = np.ascontiguousarray(self.upper, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if lower.ndim != 2 or lower.shape[0] < 1 or lower.shape[1] < 1:
            raise ValueError(f"lower must be a (M, n) matrix with M, n >= 1, got {lower.shape}")
        if upper.shape != lower.shape:
            raise ValueError(f"corner shapes differ: {lower.shape} vs {upper.shape}")
        if labels.shape != (lower.shape[0],):
            raise ValueError(f"labels must have shape ({lower.shape[0]},), got {labels.shape}")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("box corners must be finite")
        if np.any(lower > upper):
            raise ValueError("lower corner exceeds upper corner in some box")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ValueError("labels must lie in [0, num_classes)")
        self.lower = lower
        self.upper = upper
        self.labels = labels

    @property
    def num_boxes(self) -> int:
        return self.lower.shape[0]

    @property
    def dim(self) -> int:
        return self.lower.shape[1]

    def box(self, m: int) -> BoxRegion:
        return BoxRegion(self.lower[m], self.upper[m], int(self.labels[m]))

    @property
    def boxes(self) -> list[BoxRegion]:
        return [self.box(m) for m in range(self.num_boxes)]

    @classmethod
    def from_boxes(cls, boxes: list[BoxRegion], num_classes: int) -> "BoxModel":
        if not boxes:
            raise ValueError("model needs at least one box")
        dim = boxes[0].dim
        return cls(
            lower=np.stack([b.lower for b in boxes]),
            upper=np.stack([b.upper for b in boxes]),
            labels=np.array([b.label for b in boxes], dtype=np.int64),
            num_classes=num_classes,
        )


def box_l0_distance(x, box: BoxRegion) -> int:
    """Number of coordinates of x lying strictly outside the box's intervals.

    This is the minimum number of coordinate edits that moves x into the box:
    each outside coordinate must change (snap it to the nearest face), and no
    inside coordinate needs to. Zero exactly when x is in the box.
    """
    x = _as_vector(x, box.dim)
    return int(np.count_nonzero((x < box.lower) | (x > box.upper)))


def conical_distance(x, box: BoxRegion) -> float:
    """Sum over coordinates of max(lower_i - x_i, 0) + max(x_i - upper_i, 0).

    A continuous, piecewise-linear surrogate for the outside-coordinate
    count: zero exactly where the count is zero, and growing linearly as a
    coordinate moves away from its interval.
    """
    x = _as_vector(x, box.dim)
    below = np.maximum(box.lower - x, 0.0)
    above = np.maximum(x - box.upper, 0.0)
    return float(below.sum() + above.sum())


def soft_min(values, tau: float) -> float:
    """Exponentially weighted average sum(c_m * w_m) / sum(w_m), w_m = exp(-tau * c_m).

    Interpolates between the plain mean (tau = 0) and the hard minimum
    (tau -> inf). The exponentials are shifted by min(values) so that large
    tau * c cannot underflow every weight at once.
    """
    c = np.asarray(values, dtype=np.float64)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("values must be a non-empty 1-d vector")
    if not np.isfinite(c).all():
        raise ValueError("values must be finite")
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"tau must be finite and >= 0, got {tau}")
    w = np.exp(-tau * (c - c.min()))
    return float((c * w).sum() / w.sum())
