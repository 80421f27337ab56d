"""CLI pipeline: synth -> train -> certify -> eval -> verify."""

import json
import subprocess
import sys

import numpy as np
import pytest

from boxnn.cli import main
from boxnn.data import load_idx

SYNTH_CONFIG = {
    "num_boxes": 2,
    "tau": 1.0,
    "clip": 3.0,
    "lr": 0.02,
    "epochs": 20,
    "batch_size": 256,
    "seed": 1,
    "init_halfwidth": 0.1,
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert main(["synth", "--out", str(data), "--dim", "8", "--seed", "3"]) == 0
    config = root / "config.json"
    config.write_text(json.dumps(SYNTH_CONFIG))
    model = root / "model.boxnn"
    rc = main(
        [
            "train",
            "--dataset", "idx",
            "--data-dir", str(data),
            "--config", str(config),
            "--out", str(model),
        ]
    )
    assert rc == 0
    return root, data, config, model


def test_synth_writes_loadable_idx(workspace):
    _, data, _, _ = workspace
    train_set = load_idx(data / "train-images-idx3-ubyte", data / "train-labels-idx1-ubyte")
    test_set = load_idx(data / "t10k-images-idx3-ubyte", data / "t10k-labels-idx1-ubyte")
    assert train_set.dim == 8 and train_set.num_classes == 2
    assert test_set.num_samples == 200
    meta = json.loads((data / "meta.json").read_text())
    assert meta["dim"] == 8


def test_certify_single_index_json(workspace, capsys):
    root, data, _, model = workspace
    rc = main(
        [
            "certify",
            "--model", str(model),
            "--dataset", "idx",
            "--data-dir", str(data),
            "--index", "0",
            "--json",
        ]
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["predicted_label"] == payload["true_label"]
    assert payload["certified_radius"] >= 1


def test_certify_dataset_csv(workspace):
    root, data, _, model = workspace
    out = root / "certs.csv"
    rc = main(
        ["certify", "--model", str(model), "--dataset", "idx", "--data-dir", str(data), "--out", str(out)]
    )
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "index,true_label,predicted_label,d1,d2,margin,certified_radius"
    assert len(lines) == 201


def test_eval_reports_median(workspace, capsys):
    root, data, _, model = workspace
    rc = main(
        [
            "eval",
            "--model", str(model),
            "--dataset", "idx",
            "--data-dir", str(data),
            "--eps-max", "4",
            "--out", str(root / "report"),
            "--json",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out.strip().splitlines()[-1]
    payload = json.loads(out)
    assert payload["median_certified_radius"] >= 1
    assert (root / "report" / "curve.csv").exists()


def test_eval_with_baselines(workspace, capsys):
    root, data, _, model = workspace
    baselines = root / "baselines.csv"
    baselines.write_text("method,eps,acc\nreported-a,0,0.8\nreported-a,1,0.5\nreported-b,0,0.7\n")
    rc = main(
        [
            "eval",
            "--model", str(model),
            "--dataset", "idx",
            "--data-dir", str(data),
            "--eps-max", "4",
            "--baselines", str(baselines),
            "--out", str(root / "cmp"),
        ]
    )
    assert rc == 0
    header = (root / "cmp" / "plot_data.csv").read_text().splitlines()[0]
    assert header == "eps,box-nn,reported-a,reported-b"


def test_eval_subsample_deterministic(workspace, capsys):
    root, data, _, model = workspace
    outs = []
    for run in range(2):
        rc = main(
            [
                "eval",
                "--model", str(model),
                "--dataset", "idx",
                "--data-dir", str(data),
                "--eps-max", "4",
                "--subsample", "50",
                "--seed", "9",
                "--out", str(root / f"sub{run}"),
                "--json",
            ]
        )
        assert rc == 0
        outs.append(capsys.readouterr().out)
    assert (root / "sub0" / "curve.csv").read_bytes() == (root / "sub1" / "curve.csv").read_bytes()


def test_verify_small_passes(capsys):
    rc = main(
        [
            "verify",
            "--instances", "10",
            "--inputs", "4",
            "--distance-trials", "50",
            "--concentration-samples", "5000",
            "--json",
        ]
    )
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["passed"] is True
    assert set(summary["sections"]) == {
        "certificate_soundness",
        "distance_oracle",
        "synthetic_two_class",
        "concentration_bound",
    }


def test_missing_dataset_is_clean_error(tmp_path, capsys):
    rc = main(
        [
            "certify",
            "--model", str(tmp_path / "nope.boxnn"),
            "--dataset", "idx",
            "--data-dir", str(tmp_path),
            "--index", "0",
        ]
    )
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "boxnn", "--help"], capture_output=True, text=True
    )
    assert out.returncode == 0
    for command in ("train", "certify", "eval", "verify", "synth"):
        assert command in out.stdout
