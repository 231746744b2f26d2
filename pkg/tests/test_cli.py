"""End-to-end CLI runs, exit codes, manifests, and byte-level reruns."""
from __future__ import annotations

import json
import subprocess
import sys

import pytest

from riscast import cli, experiments, models

CFG = {
    "dataset": {"n_elements": 2, "length": 300, "filter_length": 16, "seed": 1},
    "train": {"epochs": 2, "test_segments": 2, "test_segment_length": 10},
    "scenario": {
        "powers_dbm": [10.0, 30.0],
        "n_list": [2],
        "power_sweep_n": 2,
        "iterations": 4,
        "segment_length": 10,
        "filter_length": 16,
        "seeds": [11],
    },
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A config file, a generated dataset, and all three trained variants."""
    root = tmp_path_factory.mktemp("cliws")
    cfg_path = root / "cfg.json"
    cfg_path.write_text(json.dumps(CFG))
    gen = root / "gen"
    assert cli.main(["generate", "--config", str(cfg_path), "--out", str(gen)]) == 0
    ckpts = root / "ckpts"
    for variant in ("transformer", "lstm", "dnn"):
        code = cli.main(
            [
                "train",
                "--config", str(cfg_path),
                "--dataset", str(gen / "dataset.csv"),
                "--variant", variant,
                "--out", str(ckpts),
            ]
        )
        assert code == 0
    return {"root": root, "cfg": cfg_path, "gen": gen, "ckpts": ckpts}


# --- generate --------------------------------------------------------------


def test_generate_writes_dataset_and_manifest(workspace):
    gen = workspace["gen"]
    assert (gen / "dataset.csv").exists()
    assert (gen / "dataset.meta.json").exists()
    doc = json.loads((gen / "manifest.json").read_text())
    assert doc["subcommand"] == "generate"
    assert doc["config"]["n_elements"] == 2
    assert doc["config"]["length"] == 300
    assert doc["artifacts"] == ["dataset.csv", "dataset.meta.json"]


def test_generate_is_deterministic(workspace, tmp_path):
    again = tmp_path / "again"
    assert cli.main(["generate", "--config", str(workspace["cfg"]), "--out", str(again)]) == 0
    assert (again / "dataset.csv").read_bytes() == (workspace["gen"] / "dataset.csv").read_bytes()


def test_generate_rejects_unknown_keys(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dataset": {"n_element": 4}}')
    assert cli.main(["generate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_generate_rejects_unknown_section(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"datasets": {}}')
    assert cli.main(["generate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_generate_rejects_invalid_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert cli.main(["generate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_generate_rejects_bad_filter_window(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dataset": {"filter_window": "kaiser"}}')
    assert cli.main(["generate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_out_root_env_is_honored(workspace, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ROOT_ENV, str(tmp_path / "envroot"))
    assert cli.main(["generate", "--config", str(workspace["cfg"])]) == 0
    assert (tmp_path / "envroot" / "generate" / "dataset.csv").exists()


# --- train -----------------------------------------------------------------


def test_train_artifacts(workspace):
    ckpts = workspace["ckpts"]
    for variant in ("transformer", "lstm", "dnn"):
        assert (ckpts / f"{variant}_n2.ckpt").exists()
    metrics = (ckpts / "metrics_dnn_n2.csv").read_text().strip().splitlines()
    assert metrics[0] == "epoch,train_rmse,val_rmse"
    assert len(metrics) == 1 + CFG["train"]["epochs"]
    summary = (ckpts / "summary_dnn_n2.csv").read_text().strip().splitlines()
    fields = dict(zip(summary[0].split(","), summary[1].split(",")))
    assert fields["variant"] == "dnn"
    assert int(fields["param_count"]) == models.analytic_param_count(
        models.ModelConfig(variant="dnn", n_elements=2)
    )


def test_trained_checkpoint_loads(workspace):
    trained = models.load_checkpoint(workspace["ckpts"] / "lstm_n2.ckpt")
    assert trained.config.variant == "lstm"
    assert trained.config.n_elements == 2
    assert len(trained.train_history) == CFG["train"]["epochs"]


def test_train_requires_dataset_flag(workspace, tmp_path):
    assert cli.main(["train", "--variant", "dnn", "--out", str(tmp_path)]) == 2


def test_train_requires_variant(workspace, tmp_path):
    code = cli.main(
        ["train", "--dataset", str(workspace["gen"] / "dataset.csv"), "--out", str(tmp_path)]
    )
    assert code == 2


def test_train_rejects_missing_dataset(tmp_path):
    code = cli.main(
        ["train", "--dataset", str(tmp_path / "nope.csv"), "--variant", "dnn", "--out", str(tmp_path)]
    )
    assert code == 2


def test_train_rejects_missing_metadata(workspace, tmp_path):
    orphan = tmp_path / "dataset.csv"
    orphan.write_bytes((workspace["gen"] / "dataset.csv").read_bytes())
    code = cli.main(["train", "--dataset", str(orphan), "--variant", "dnn", "--out", str(tmp_path)])
    assert code == 2


# --- sweep -----------------------------------------------------------------


def test_sweep_requires_checkpoints(workspace, tmp_path):
    assert cli.main(["sweep", "--config", str(workspace["cfg"]), "--out", str(tmp_path)]) == 2


def test_sweep_rejects_missing_checkpoint_files(workspace, tmp_path):
    code = cli.main(
        [
            "sweep",
            "--config", str(workspace["cfg"]),
            "--checkpoints", str(tmp_path),
            "--out", str(tmp_path / "o"),
        ]
    )
    assert code == 2


def test_sweep_end_to_end(workspace, tmp_path):
    out = tmp_path / "sweep"
    code = cli.main(
        [
            "sweep",
            "--config", str(workspace["cfg"]),
            "--checkpoints", str(workspace["ckpts"]),
            "--out", str(out),
        ]
    )
    assert code == 0
    for name in (
        "power_sweep.csv",
        "power_sweep_outage.svg",
        "power_sweep_rate.svg",
        "element_sweep.csv",
        "element_sweep_outage.svg",
        "element_sweep_rate.svg",
        "manifest.json",
    ):
        assert (out / name).exists(), name
    rows = experiments.read_sweep_csv(out / "power_sweep.csv")
    assert {r.scheme for r in rows} == {
        "optimal-csi", "transformer", "lstm", "dnn", "fixed-phase", "no-ris",
    }
    assert {r.power_dbm for r in rows} == {10.0, 30.0}
    workspace["sweep_out"] = out


def test_sweep_kind_power_only(workspace, tmp_path):
    out = tmp_path / "power_only"
    code = cli.main(
        [
            "sweep",
            "--config", str(workspace["cfg"]),
            "--checkpoints", str(workspace["ckpts"]),
            "--kind", "power",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert (out / "power_sweep.csv").exists()
    assert not (out / "element_sweep.csv").exists()


# --- report ----------------------------------------------------------------


def test_report_requires_inputs(tmp_path):
    assert cli.main(["report", "--out", str(tmp_path)]) == 2


def test_report_renders_from_csvs(workspace, tmp_path):
    sweep_csv = workspace.get("sweep_out")
    if sweep_csv is None:
        pytest.skip("sweep test did not run first")
    out = tmp_path / "report"
    code = cli.main(
        [
            "report",
            "--sweep-csv", str(sweep_csv / "power_sweep.csv"),
            "--metrics-csv", str(workspace["ckpts"] / "metrics_dnn_n2.csv"),
            "--out", str(out),
        ]
    )
    assert code == 0
    assert (out / "power_sweep_outage.svg").exists()
    assert (out / "metrics_dnn_n2_curves.svg").exists()


def test_report_missing_file_is_config_error(tmp_path):
    assert cli.main(["report", "--sweep-csv", str(tmp_path / "no.csv"), "--out", str(tmp_path)]) == 2


def test_report_foreign_csv_is_runtime_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    assert cli.main(["report", "--sweep-csv", str(bad), "--out", str(tmp_path / "o")]) == 1


# --- rerun -----------------------------------------------------------------


def test_rerun_reproduces_dataset_bytes(workspace, tmp_path):
    out = tmp_path / "redo"
    code = cli.main(
        ["rerun", "--manifest", str(workspace["gen"] / "manifest.json"), "--out", str(out)]
    )
    assert code == 0
    assert (out / "dataset.csv").read_bytes() == (workspace["gen"] / "dataset.csv").read_bytes()
    assert (out / "dataset.meta.json").read_bytes() == (
        workspace["gen"] / "dataset.meta.json"
    ).read_bytes()


def test_rerun_missing_manifest(tmp_path):
    assert cli.main(["rerun", "--manifest", str(tmp_path / "no.json"), "--out", str(tmp_path)]) == 2


def test_rerun_rejects_bad_manifest(tmp_path):
    bad = tmp_path / "manifest.json"
    bad.write_text("{broken")
    assert cli.main(["rerun", "--manifest", str(bad), "--out", str(tmp_path / "o")]) == 2
    bad.write_text('{"format_version": 99, "subcommand": "generate", "config": {}}')
    assert cli.main(["rerun", "--manifest", str(bad), "--out", str(tmp_path / "o")]) == 2


# --- process-level ---------------------------------------------------------


def test_version_flag_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "riscast.cli", "--version"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("riscast ")
