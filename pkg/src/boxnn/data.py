"""Dataset container and IDX-format ingestion.

IDX is the MNIST distribution format: big-endian, a 4-byte magic encoding
the element type and rank, one 4-byte size per dimension, then the raw
payload. Images use magic 0x00000803 (u8, count x rows x cols); labels use
0x00000801 (u8, count). Pixels are normalized to [0, 1] by dividing by 255
and images are flattened row-major, so pixel index i maps to
(row = i // cols, col = i % cols).

Gzipped files are detected by their two-byte signature and decompressed
transparently.
"""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "IdxFormatError",
    "IdxBadMagicError",
    "IdxTruncatedError",
    "IdxCountMismatchError",
    "load_idx",
    "save_idx",
    "subsample",
    "default_data_dir",
    "find_split",
    "load_split",
]

_IMAGES_MAGIC = 0x00000803
_LABELS_MAGIC = 0x00000801

DATA_DIR_ENV = "BOXNN_DATA_DIR"

_SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class IdxFormatError(ValueError):
    """Base class for malformed IDX input."""


class IdxBadMagicError(IdxFormatError):
    pass


class IdxTruncatedError(IdxFormatError):
    pass


class IdxCountMismatchError(IdxFormatError):
    pass


@dataclass
class Dataset:
    """Flat real-vector samples in [0, 1]^n with integer labels."""

    xs: np.ndarray  # (N, n) float64 in [0, 1]
    ys: np.ndarray  # (N,) int64 in [0, num_classes)
    num_classes: int

    def __post_init__(self):
        xs = np.ascontiguousarray(self.xs, dtype=np.float64)
        ys = np.ascontiguousarray(self.ys, dtype=np.int64)
        if xs.ndim != 2:
            raise ValueError(f"xs must be (N, n), got shape {xs.shape}")
        if ys.shape != (xs.shape[0],):
            raise ValueError(f"ys must have shape ({xs.shape[0]},), got {ys.shape}")
        if xs.size and not (np.isfinite(xs).all() and xs.min() >= 0.0 and xs.max() <= 1.0):
            raise ValueError("pixel values must be finite and lie in [0, 1]")
        if self.num_classes < 0:
            raise ValueError("num_classes must be >= 0")
        if ys.size and (ys.min() < 0 or ys.max() >= self.num_classes):
            raise ValueError("labels must lie in [0, num_classes)")
        self.xs = xs
        self.ys = ys

    @property
    def num_samples(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_header(raw: bytes, expected_magic: int, rank: int, path) -> tuple[int, ...]:
    header = 4 * (1 + rank)
    if len(raw) < header:
        raise IdxTruncatedError(f"{path}: file shorter than its {header}-byte header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != expected_magic:
        raise IdxBadMagicError(
            f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    return struct.unpack(f">{rank}I", raw[4:header])


def load_idx(images_path, labels_path) -> Dataset:
    """Load an images/labels IDX pair into a normalized Dataset.

    Raises IdxBadMagicError, IdxTruncatedError, or IdxCountMismatchError for
    the corresponding defects.
    """
    img_raw = _read_bytes(images_path)
    count, rows, cols = _parse_header(img_raw, _IMAGES_MAGIC, 3, images_path)
    payload = img_raw[16:]
    if len(payload) != count * rows * cols:
        raise IdxTruncatedError(
            f"{images_path}: expected {count * rows * cols} pixel bytes, found {len(payload)}"
        )

    lbl_raw = _read_bytes(labels_path)
    (lbl_count,) = _parse_header(lbl_raw, _LABELS_MAGIC, 1, labels_path)
    lbl_payload = lbl_raw[8:]
    if len(lbl_payload) != lbl_count:
        raise IdxTruncatedError(
            f"{labels_path}: expected {lbl_count} label bytes, found {len(lbl_payload)}"
        )
    if lbl_count != count:
        raise IdxCountMismatchError(
            f"images hold {count} items but labels hold {lbl_count}"
        )

    xs = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    xs = xs.reshape(count, rows * cols)
    ys = np.frombuffer(lbl_payload, dtype=np.uint8).astype(np.int64)
    num_classes = int(ys.max()) + 1 if ys.size else 0
    return Dataset(xs=xs, ys=ys, num_classes=num_classes)


def save_idx(dataset: Dataset, images_path, labels_path, rows: int, cols: int) -> None:
    """Write the dataset back out as an IDX pair (pixels re-quantized to u8).

    rows * cols must equal the dataset dimension. A load -> save round trip
    reproduces the original pixel bytes exactly, since normalization is a
    plain division by 255.
    """
    if rows * cols != dataset.dim:
        raise ValueError(f"rows*cols = {rows * cols} does not match dimension {dataset.dim}")
    pixels = np.rint(dataset.xs * 255.0)
    if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
        raise ValueError("pixel values outside [0, 1] cannot be quantized")
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", _IMAGES_MAGIC, dataset.num_samples, rows, cols))
        fh.write(pixels.astype(np.uint8).tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", _LABELS_MAGIC, dataset.num_samples))
        fh.write(dataset.ys.astype(np.uint8).tobytes())


def subsample(dataset: Dataset, count: int, seed: int) -> Dataset:
    """Uniform subset without replacement; deterministic in seed."""
    if count < 0 or count > dataset.num_samples:
        raise ValueError(f"cannot draw {count} of {dataset.num_samples} samples")
    idx = np.random.default_rng(seed).choice(dataset.num_samples, size=count, replace=False)
    return Dataset(xs=dataset.xs[idx], ys=dataset.ys[idx], num_classes=dataset.num_classes)


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


def find_split(data_dir, dataset: str, split: str) -> tuple[Path, Path]:
    """Locate the IDX pair for a named dataset split.

    dataset is a directory name under data_dir ('mnist', 'fashion-mnist', ...)
    or 'idx' for files sitting directly in data_dir. Plain and .gz files are
    both accepted.
    """
    if split not in _SPLIT_FILES:
        raise ValueError(f"unknown split {split!r}, expected one of {sorted(_SPLIT_FILES)}")
    base = Path(data_dir)
    roots = [base] if dataset == "idx" else [base / dataset, base]
    tried = []
    img_name, lbl_name = _SPLIT_FILES[split]
    for root in roots:
        for suffix in ("", ".gz"):
            img = root / (img_name + suffix)
            lbl = root / (lbl_name + suffix)
            if img.exists() and lbl.exists():
                return img, lbl
            tried.extend([str(img), str(lbl)])
    raise FileNotFoundError(
        f"no {split} IDX pair for dataset {dataset!r}; tried: " + ", ".join(tried)
    )


def load_split(data_dir, dataset: str, split: str) -> Dataset:
    return load_idx(*find_split(data_dir, dataset, split))
