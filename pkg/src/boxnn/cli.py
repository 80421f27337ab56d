"""Command-line front door: train, certify, eval, verify, synth."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .certify import cert, cert_batch
from .data import Dataset, default_data_dir, load_idx, load_split, save_idx, subsample
from .evaluate import cert_acc_curve, emit_report, median_certified_radius
from .model_io import load_model, save_model
from .oracle import SynthSpec, run_verify_suite, synth_two_class
from .train import TrainConfig, train


def _add_data_args(parser: argparse.ArgumentParser, split_default: str) -> None:
    group = parser.add_argument_group("dataset selection")
    group.add_argument("--dataset", help="dataset directory name under the data dir, or 'idx' for files directly in it")
    group.add_argument("--data-dir", default=None, help="dataset root (default: $BOXNN_DATA_DIR or ./data)")
    group.add_argument("--split", default=split_default, choices=["train", "test"])
    group.add_argument("--images", help="explicit IDX images path (overrides --dataset)")
    group.add_argument("--labels", help="explicit IDX labels path")
    group.add_argument("--subsample", type=int, default=None, metavar="N", help="evaluate on a random N-point subset")
    group.add_argument("--seed", type=int, default=0, help="seed for subsampling / config override")


def _resolve_dataset(args) -> Dataset:
    if args.images or args.labels:
        if not (args.images and args.labels):
            raise SystemExit("--images and --labels must be given together")
        dataset = load_idx(args.images, args.labels)
    elif args.dataset:
        data_dir = args.data_dir if args.data_dir is not None else default_data_dir()
        dataset = load_split(data_dir, args.dataset, args.split)
    else:
        raise SystemExit("specify a dataset via --dataset or --images/--labels")
    if args.subsample is not None:
        dataset = subsample(dataset, args.subsample, args.seed)
    return dataset


def _load_config(path, seed_override) -> TrainConfig:
    if path:
        with open(path) as fh:
            config = TrainConfig.from_dict(json.load(fh))
    else:
        config = TrainConfig()
    if seed_override is not None:
        config = TrainConfig.from_dict({**config.to_dict(), "seed": seed_override})
    return config


def _json_num(value):
    # JSON has no Infinity; the no-differing-label sentinel serializes as null
    return None if isinstance(value, float) and math.isinf(value) else value


def _cmd_train(args) -> int:
    dataset = _resolve_dataset(args)
    config = _load_config(args.config, args.seed if args.seed_given else None)
    start = time.perf_counter()
    model, history = train(dataset, config)
    elapsed = time.perf_counter() - start
    save_model(model, args.out, config)
    if args.json:
        print(json.dumps({
            "backend": kernels.backend(),
            "seconds": elapsed,
            "model": args.out,
            "epochs": [
                {"loss": r.loss, "accuracy": r.accuracy, "mean_relaxed_certificate": r.mean_relaxed_certificate}
                for r in history
            ],
        }))
    else:
        for i, r in enumerate(history):
            print(f"epoch {i:3d}  loss {r.loss:10.4f}  acc {r.accuracy:.4f}  mean-cert {r.mean_relaxed_certificate:8.3f}")
        print(f"trained {config.epochs} epochs in {elapsed:.1f}s ({kernels.backend()} backend) -> {args.out}")
    return 0


def _cmd_certify(args) -> int:
    model, _ = load_model(args.model)
    dataset = _resolve_dataset(args)
    if args.index is not None:
        if not 0 <= args.index < dataset.num_samples:
            raise SystemExit(f"--index out of range [0, {dataset.num_samples})")
        result = cert(model, dataset.xs[args.index])
        payload = {
            "index": args.index,
            "true_label": int(dataset.ys[args.index]),
            "predicted_label": result.predicted_label,
            "d1": result.d1,
            "d2": _json_num(result.d2),
            "margin": _json_num(result.margin),
            "certified_radius": result.certified_radius,
        }
        print(json.dumps(payload) if args.json else ", ".join(f"{k}={v}" for k, v in payload.items()))
        return 0
    if not args.out:
        raise SystemExit("dataset-wide certification needs --out for the CSV")
    batch = cert_batch(model, dataset.xs)
    with open(args.out, "w") as fh:
        fh.write("index,true_label,predicted_label,d1,d2,margin,certified_radius\n")
        for i in range(dataset.num_samples):
            d2 = batch.d2[i]
            d2_s = "inf" if math.isinf(d2) else str(int(d2))
            margin = batch.margin[i]
            margin_s = "inf" if math.isinf(margin) else str(int(margin))
            fh.write(
                f"{i},{dataset.ys[i]},{batch.predicted_labels[i]},{batch.d1[i]},"
                f"{d2_s},{margin_s},{batch.certified_radius[i]}\n"
            )
    summary = {
        "points": dataset.num_samples,
        "clean_accuracy": float(np.mean(batch.predicted_labels == dataset.ys)),
        "out": args.out,
    }
    print(json.dumps(summary) if args.json else f"wrote {args.out} ({summary['points']} points, clean acc {summary['clean_accuracy']:.4f})")
    return 0


def _cmd_eval(args) -> int:
    model, _ = load_model(args.model)
    dataset = _resolve_dataset(args)
    eps_max = min(args.eps_max, model.dim)
    curve = cert_acc_curve(model, dataset, eps_max)
    files = emit_report(curve, args.out, baselines_csv=args.baselines)
    if args.json:
        print(json.dumps({
            "median_certified_radius": median_certified_radius(curve),
            "clean_accuracy": float(curve.acc[0]),
            "eps_max": eps_max,
            "files": {k: str(v) for k, v in files.items()},
            "curve": curve.acc.tolist(),
        }))
    return 0


def _cmd_verify(args) -> int:
    summary = run_verify_suite(
        seed=args.seed,
        instances=args.instances,
        inputs_per_instance=args.inputs,
        distance_trials=args.distance_trials,
        concentration_samples=args.concentration_samples,
    )
    print(json.dumps(summary, indent=None if args.json else 2))
    return 0 if summary["passed"] else 1


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        dim=args.dim,
        eps_inf=args.eps_inf,
        samples_per_class=args.samples_per_class,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    # standard split filenames so --dataset idx --data-dir <out> finds them;
    # u8 quantization moves each pixel by at most 1/510
    train_set = synth_two_class(spec)
    test_spec = SynthSpec(
        dim=args.dim,
        eps_inf=args.eps_inf,
        samples_per_class=args.samples_per_class,
        seed=args.test_seed if args.test_seed is not None else args.seed + 1,
    )
    test_set = synth_two_class(test_spec)
    save_idx(train_set, out / "train-images-idx3-ubyte", out / "train-labels-idx1-ubyte", 1, args.dim)
    save_idx(test_set, out / "t10k-images-idx3-ubyte", out / "t10k-labels-idx1-ubyte", 1, args.dim)
    meta = {
        "dim": args.dim,
        "eps_inf": args.eps_inf,
        "samples_per_class": args.samples_per_class,
        "train_seed": spec.seed,
        "test_seed": test_spec.seed,
        "centers": [spec.center0.tolist(), spec.center1.tolist()],
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(json.dumps({"out": str(out), **meta}) if args.json else f"wrote synthetic dataset to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a box model")
    _add_data_args(p_train, "train")
    p_train.add_argument("--config", help="JSON file of training hyperparameters")
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.add_argument("--json", action="store_true")
    p_train.set_defaults(func=_cmd_train)

    p_cert = sub.add_parser("certify", help="certify a single input or a whole dataset")
    _add_data_args(p_cert, "test")
    p_cert.add_argument("--model", required=True)
    p_cert.add_argument("--index", type=int, default=None, help="certify only this dataset index")
    p_cert.add_argument("--out", help="CSV path for dataset-wide certification")
    p_cert.add_argument("--json", action="store_true")
    p_cert.set_defaults(func=_cmd_certify)

    p_eval = sub.add_parser("eval", help="certified-accuracy curve and metrics")
    _add_data_args(p_eval, "test")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--eps-max", type=int, default=50)
    p_eval.add_argument("--baselines", help="CSV of baseline curves (method,eps,acc)")
    p_eval.add_argument("--out", required=True, help="output directory for report files")
    p_eval.add_argument("--json", action="store_true")
    p_eval.set_defaults(func=_cmd_eval)

    p_verify = sub.add_parser("verify", help="run the certificate/oracle verification suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--instances", type=int, default=200)
    p_verify.add_argument("--inputs", type=int, default=20)
    p_verify.add_argument("--distance-trials", type=int, default=1000)
    p_verify.add_argument("--concentration-samples", type=int, default=100_000)
    p_verify.add_argument("--json", action="store_true", help="compact single-line JSON")
    p_verify.set_defaults(func=_cmd_verify)

    p_synth = sub.add_parser("synth", help="generate the two-ball synthetic dataset as IDX files")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--dim", type=int, default=8)
    p_synth.add_argument("--eps-inf", type=float, default=0.05)
    p_synth.add_argument("--samples-per-class", type=int, default=100)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--test-seed", type=int, default=None)
    p_synth.add_argument("--json", action="store_true")
    p_synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # distinguish "--seed given" from the default for config override
    args.seed_given = any(
        a == "--seed" or a.startswith("--seed=") for a in (argv if argv is not None else sys.argv[1:])
    )
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        error = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(args, "json", False):
            print(json.dumps(error))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
