"""boxnn: nearest-box classification with exact sparse-robustness certificates."""

from .certify import CertBatch, CertResult, cert, cert_batch, predict, predict_batch
from .core import BoxModel, BoxRegion, box_l0_distance, conical_distance, soft_min
from .data import Dataset, load_idx, save_idx, subsample
from .evaluate import CertCurve, cert_acc_curve, emit_report, median_certified_radius
from .kernels import backend
from .model_io import load_model, save_model
from .oracle import (
    SynthSpec,
    ball_box_model,
    concentration_mc_check,
    exhaustive_attack,
    localization_eps_uniform,
    run_verify_suite,
    synth_two_class,
)
from .train import LossReport, TrainConfig, init_model, loss, relaxed_certificate, train

__version__ = "0.1.0"

__all__ = [
    "BoxRegion",
    "BoxModel",
    "box_l0_distance",
    "conical_distance",
    "soft_min",
    "CertResult",
    "CertBatch",
    "predict",
    "predict_batch",
    "cert",
    "cert_batch",
    "TrainConfig",
    "LossReport",
    "init_model",
    "relaxed_certificate",
    "loss",
    "train",
    "Dataset",
    "load_idx",
    "save_idx",
    "subsample",
    "CertCurve",
    "cert_acc_curve",
    "median_certified_radius",
    "emit_report",
    "save_model",
    "load_model",
    "SynthSpec",
    "synth_two_class",
    "ball_box_model",
    "exhaustive_attack",
    "localization_eps_uniform",
    "concentration_mc_check",
    "run_verify_suite",
    "backend",
    "__version__",
]
