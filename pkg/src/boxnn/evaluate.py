"""Certified-accuracy curves, summary metrics, and report emission.

The certified accuracy at budget eps is the fraction of test points that
are both correctly classified and carry a certified radius of at least eps.
Curves are computed in one pass by histogramming the radii of the correctly
classified points; baseline curves for comparison are consumed as CSV data,
never recomputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .certify import cert_batch
from .core import BoxModel
from .data import Dataset

__all__ = [
    "CertCurve",
    "CsvFormatError",
    "cert_acc_curve",
    "median_certified_radius",
    "write_curve_csv",
    "read_curve_csv",
    "read_baselines_csv",
    "emit_report",
]


class CsvFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CertCurve:
    """Certified accuracy per integer budget 0..eps_max (non-increasing)."""

    eps: np.ndarray  # (E+1,) int64, consecutive from 0
    acc: np.ndarray  # (E+1,) float64 in [0, 1]

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=np.int64)
        acc = np.asarray(self.acc, dtype=np.float64)
        if eps.ndim != 1 or eps.size == 0 or acc.shape != eps.shape:
            raise ValueError("eps and acc must be matching non-empty vectors")
        if not np.array_equal(eps, np.arange(eps.size)):
            raise ValueError("eps must be consecutive integers starting at 0")
        if acc.size and (acc.min() < 0.0 or acc.max() > 1.0):
            raise ValueError("accuracies must lie in [0, 1]")
        if np.any(np.diff(acc) > 0):
            raise ValueError("certified accuracy must be non-increasing in eps")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "acc", acc)


def cert_acc_curve(model: BoxModel, dataset: Dataset, eps_max: int) -> CertCurve:
    """Certified accuracy at every budget 0..eps_max in a single pass."""
    if dataset.num_samples == 0:
        raise ValueError("dataset is empty")
    if not 0 <= eps_max <= model.dim:
        raise ValueError(f"eps_max must lie in [0, {model.dim}], got {eps_max}")
    batch = cert_batch(model, dataset.xs)
    correct = batch.predicted_labels == dataset.ys
    radii = np.minimum(batch.certified_radius[correct], eps_max)
    counts = np.bincount(radii, minlength=eps_max + 1)
    certified_at = counts[::-1].cumsum()[::-1]  # suffix sums: radius >= eps
    acc = certified_at / dataset.num_samples
    return CertCurve(eps=np.arange(eps_max + 1), acc=acc)


def median_certified_radius(curve: CertCurve) -> int:
    """Largest budget still certified for at least half the test set; -1 if
    even the clean certified accuracy is below one half."""
    hits = np.nonzero(curve.acc >= 0.5)[0]
    return int(hits.max()) if hits.size else -1


def write_curve_csv(curve: CertCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps", "acc"])
        for e, a in zip(curve.eps.tolist(), curve.acc.tolist()):
            writer.writerow([e, repr(a)])


def read_curve_csv(path) -> CertCurve:
    eps, acc = [], []
    for lineno, row in _iter_csv(path, header=["eps", "acc"]):
        eps.append(_parse_int(row[0], lineno, path))
        acc.append(_parse_acc(row[1], lineno, path))
    return CertCurve(eps=np.array(eps, dtype=np.int64), acc=np.array(acc))


def read_baselines_csv(path) -> dict[str, list[tuple[int, float]]]:
    """Parse a (method, eps, acc) CSV into per-method curves sorted by eps."""
    out: dict[str, list[tuple[int, float]]] = {}
    for lineno, row in _iter_csv(path, header=["method", "eps", "acc"]):
        method = row[0].strip()
        if not method:
            raise CsvFormatError(f"{path}: line {lineno}: empty method name")
        eps = _parse_int(row[1], lineno, path)
        acc = _parse_acc(row[2], lineno, path)
        out.setdefault(method, []).append((eps, acc))
    for points in out.values():
        points.sort()
    return out


def _iter_csv(path, header: list[str]):
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    if [c.strip().lower() for c in rows[0]] != header:
        raise CsvFormatError(f"{path}: line 1: expected header {','.join(header)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CsvFormatError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        yield lineno, row


def _parse_int(text: str, lineno: int, path) -> int:
    try:
        return int(text)
    except ValueError:
        raise CsvFormatError(f"{path}: line {lineno}: bad integer {text!r}") from None


def _parse_acc(text: str, lineno: int, path) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(f"{path}: line {lineno}: bad accuracy {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise CsvFormatError(f"{path}: line {lineno}: accuracy {value} outside [0, 1]")
    return value


def emit_report(
    curve: CertCurve,
    out_dir,
    baselines_csv=None,
    method: str = "box-nn",
) -> dict[str, Path]:
    """Write the curve CSV and, when baselines are given, a merged long-form
    comparison table plus a wide plot-ready table. Returns the file paths and
    prints the median certified radius."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}

    curve_path = out_dir / "curve.csv"
    write_curve_csv(curve, curve_path)
    files["curve"] = curve_path

    if baselines_csv is not None:
        methods = {method: list(zip(curve.eps.tolist(), curve.acc.tolist()))}
        for name, points in read_baselines_csv(baselines_csv).items():
            methods[name] = points

        comparison_path = out_dir / "comparison.csv"
        with open(comparison_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "eps", "acc"])
            for name in methods:
                for e, a in methods[name]:
                    writer.writerow([name, e, repr(a)])
        files["comparison"] = comparison_path

        plot_path = out_dir / "plot_data.csv"
        all_eps = sorted({e for points in methods.values() for e, _ in points})
        lookup = {name: dict(points) for name, points in methods.items()}
        with open(plot_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eps"] + list(methods))
            for e in all_eps:
                row = [e]
                for name in methods:
                    a = lookup[name].get(e)
                    row.append("" if a is None else repr(a))
                writer.writerow(row)
        files["plot_data"] = plot_path

    print(f"median certified radius: {median_certified_radius(curve)}")
    return files
