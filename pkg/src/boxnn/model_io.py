"""Versioned binary model files with bit-exact round trips.

Layout (little-endian, version 1):

    offset 0   8 bytes   magic b"BOXNNMDL"
    offset 8   uint32    format version (1)
    offset 12  uint32    header length H
    offset 16  H bytes   UTF-8 JSON: {"num_boxes", "dim", "num_classes",
                         "config" (training hyperparameters or null)}
    then       int64[M]            box labels
    then       float64[M*n]        lower corners, C order
    then       float64[M*n]        upper corners, C order

Corner data is written raw from the in-memory float64 arrays, so
save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import BoxModel
from .train import TrainConfig

__all__ = ["ModelFormatError", "save_model", "load_model"]

_MAGIC = b"BOXNNMDL"
_VERSION = 1


class ModelFormatError(ValueError):
    pass


def save_model(model: BoxModel, path, config: TrainConfig | None = None) -> None:
    header = json.dumps(
        {
            "num_boxes": model.num_boxes,
            "dim": model.dim,
            "num_classes": model.num_classes,
            "config": config.to_dict() if config is not None else None,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(header)))
        fh.write(header)
        fh.write(model.labels.astype("<i8").tobytes())
        fh.write(model.lower.astype("<f8").tobytes())
        fh.write(model.upper.astype("<f8").tobytes())


def load_model(path) -> tuple[BoxModel, TrainConfig | None]:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:8] != _MAGIC:
        raise ModelFormatError(f"{path}: not a box model file")
    version, header_len = struct.unpack("<II", raw[8:16])
    if version != _VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {version}")
    if len(raw) < 16 + header_len:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        meta = json.loads(raw[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt header ({exc})") from exc
    try:
        num_boxes, dim, num_classes = meta["num_boxes"], meta["dim"], meta["num_classes"]
    except KeyError as exc:
        raise ModelFormatError(f"{path}: header missing field {exc}") from exc

    body = raw[16 + header_len :]
    expect = num_boxes * 8 + 2 * num_boxes * dim * 8
    if len(body) != expect:
        raise ModelFormatError(f"{path}: expected {expect} payload bytes, found {len(body)}")
    labels = np.frombuffer(body[: num_boxes * 8], dtype="<i8").astype(np.int64)
    corner_bytes = num_boxes * dim * 8
    lower = np.frombuffer(body[num_boxes * 8 :][:corner_bytes], dtype="<f8")
    upper = np.frombuffer(body[num_boxes * 8 + corner_bytes :], dtype="<f8")
    model = BoxModel(
        lower=lower.reshape(num_boxes, dim).copy(),
        upper=upper.reshape(num_boxes, dim).copy(),
        labels=labels,
        num_classes=num_classes,
    )
    config = TrainConfig.from_dict(meta["config"]) if meta.get("config") else None
    return model, config
