"""Command-line entry points.

Subcommands: generate (dataset files), train (one predictor), sweep
(Monte Carlo power/element sweeps plus figures), report (figures from
CSVs alone), and rerun (re-execute a recorded manifest).  Every run
resolves its configuration from defaults, an optional JSON config file,
and flags, writes a manifest with the fully resolved configuration
before any result, and then writes results only under its output
directory.  Re-running a manifest reproduces every CSV byte for byte.

Exit codes: 0 on success, 2 for configuration problems, 1 for runtime
failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, channel, experiments, models, plots
from .errors import ConfigError, RiscastError

MANIFEST_VERSION = 1
OUT_ROOT_ENV = "RISCAST_OUT"

DATASET_DEFAULTS = {
    "n_elements": 8,
    "length": 2550,
    "window": 10,
    "train_fraction": 0.8,
    "normalized_doppler": 0.01,
    "filter_length": 64,
    "filter_window": "hamming",
    "seed": 1,
}
TRAIN_DEFAULTS = {
    "epochs": 100,
    "batch_size": 32,
    "learning_rate": 1e-3,
    "beta1": 0.9,
    "beta2": 0.999,
    "eps": 1e-8,
    "seed": 0,
    "test_segments": 40,
    "test_segment_length": 50,
}
MODEL_DEFAULTS = {
    "variant": None,
    "dnn_hidden": None,
    "lstm_width": None,
    "lstm_fc_width": None,
    "d_model": None,
    "heads": 4,
    "ff_width": None,
    "kernel_size": 3,
}
SCENARIO_DEFAULTS = {
    "noise_dbw": -100.0,
    "gamma_threshold": 1.0,
    "powers_dbm": [float(p) for p in range(0, 51, 2)],
    "n_list": [4, 8, 12, 16, 20],
    "power_sweep_n": 8,
    "element_sweep_power_dbm": 30.0,
    "iterations": 2000,
    "segment_length": 50,
    "window": 10,
    "normalized_doppler": 0.01,
    "filter_length": 64,
    "filter_window": "hamming",
    "seeds": [11, 12, 13],
    "direct_link": True,
}
GEOMETRY_DEFAULTS = asdict(channel.LinkGeometry())


def _merge(defaults: dict, override: dict | None, context: str) -> dict:
    merged = dict(defaults)
    for key, value in (override or {}).items():
        if key not in defaults and key != "geometry":
            raise ConfigError(f"unknown key {key!r} in {context} configuration")
        merged[key] = value
    return merged


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = set(doc) - {"dataset", "model", "train", "scenario"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return doc


def _resolve_geometry(section: dict | None) -> dict:
    return _merge(GEOMETRY_DEFAULTS, section, "geometry")


def _out_dir(args, subcommand: str) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get(OUT_ROOT_ENV, "runs")
    return Path(root) / subcommand


def _write_manifest(out_dir: Path, subcommand: str, config: dict, artifacts: list[str]) -> None:
    doc = {
        "format_version": MANIFEST_VERSION,
        "tool": f"riscast {__version__}",
        "subcommand": subcommand,
        "config": config,
        "artifacts": artifacts,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    tmp.replace(out_dir / "manifest.json")


# --- generate -------------------------------------------------------------


def _resolve_generate(args, file_cfg: dict) -> dict:
    cfg = _merge(DATASET_DEFAULTS, file_cfg.get("dataset"), "dataset")
    cfg["geometry"] = _resolve_geometry(file_cfg.get("dataset", {}).get("geometry"))
    if getattr(args, "n", None) is not None:
        cfg["n_elements"] = args.n
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    channel.LinkGeometry(**cfg["geometry"])
    channel.build_correlation_filter(
        cfg["normalized_doppler"], cfg["filter_length"], cfg["filter_window"]
    )
    return cfg


def _execute_generate(cfg: dict, out_dir: Path) -> None:
    geometry = channel.LinkGeometry(**cfg["geometry"])
    filt = channel.build_correlation_filter(
        cfg["normalized_doppler"], cfg["filter_length"], cfg["filter_window"]
    )
    artifacts = ["dataset.csv", "dataset.meta.json"]
    _write_manifest(out_dir, "generate", cfg, artifacts)
    series = channel.generate_channel_series(
        geometry, cfg["n_elements"], cfg["length"], filt, cfg["seed"]
    )
    matrix = channel.to_feature_matrix(series)
    probe = channel.windowize(matrix, cfg["window"], cfg["train_fraction"])
    stats = channel.compute_norm_stats(matrix[: probe.n_train + cfg["window"]])
    channel.write_dataset_csv(out_dir / "dataset.csv", matrix, cfg["n_elements"])
    channel.write_dataset_meta(
        out_dir / "dataset.meta.json",
        channel.DatasetMeta(
            seed=cfg["seed"],
            n_elements=cfg["n_elements"],
            length=cfg["length"],
            window=cfg["window"],
            train_fraction=cfg["train_fraction"],
            normalized_doppler=cfg["normalized_doppler"],
            filter_length=cfg["filter_length"],
            filter_window=cfg["filter_window"],
            geometry=geometry,
            stats=stats,
        ),
    )
    print(f"wrote {out_dir / 'dataset.csv'} ({cfg['length']} rows, N={cfg['n_elements']})")


# --- train ----------------------------------------------------------------


def _meta_path(dataset_csv: Path) -> Path:
    return dataset_csv.with_name(dataset_csv.stem + ".meta.json")


def _resolve_train(args, file_cfg: dict) -> dict:
    if not getattr(args, "dataset", None):
        raise ConfigError("train needs --dataset pointing at a generated dataset CSV")
    model_cfg = _merge(MODEL_DEFAULTS, file_cfg.get("model"), "model")
    if getattr(args, "variant", None):
        model_cfg["variant"] = args.variant
    if not model_cfg["variant"]:
        raise ConfigError("no model variant selected; pass --variant or set model.variant")
    if model_cfg["variant"] not in models.VARIANTS:
        raise ConfigError(f"unknown variant {model_cfg['variant']!r}, expected one of {models.VARIANTS}")
    train_cfg = _merge(TRAIN_DEFAULTS, file_cfg.get("train"), "train")
    if getattr(args, "seed", None) is not None:
        train_cfg["seed"] = args.seed
    return {"dataset_csv": str(args.dataset), "model": model_cfg, "train": train_cfg}


def _execute_train(cfg: dict, out_dir: Path) -> None:
    dataset_csv = Path(cfg["dataset_csv"])
    if not dataset_csv.exists():
        raise ConfigError(f"dataset file {dataset_csv} does not exist")
    meta_path = _meta_path(dataset_csv)
    if not meta_path.exists():
        raise ConfigError(f"dataset metadata {meta_path} does not exist")
    meta = channel.read_dataset_meta(meta_path)
    matrix, n_elements = channel.read_dataset_csv(dataset_csv)
    if n_elements != meta.n_elements:
        raise ConfigError(
            f"dataset {dataset_csv} has N={n_elements} but its metadata says N={meta.n_elements}"
        )
    if meta.stats is None:
        raise ConfigError(f"{meta_path} lacks normalization statistics")
    mc = cfg["model"]
    model_config = models.ModelConfig(
        variant=mc["variant"],
        n_elements=n_elements,
        window=meta.window,
        dnn_hidden=tuple(mc["dnn_hidden"]) if mc.get("dnn_hidden") else None,
        lstm_width=mc.get("lstm_width"),
        lstm_fc_width=mc.get("lstm_fc_width"),
        d_model=mc.get("d_model"),
        heads=mc.get("heads", 4),
        ff_width=mc.get("ff_width"),
        kernel_size=mc.get("kernel_size", 3),
    ).resolved()
    tc = cfg["train"]
    train_config = models.TrainConfig(
        epochs=tc["epochs"],
        batch_size=tc["batch_size"],
        learning_rate=tc["learning_rate"],
        beta1=tc["beta1"],
        beta2=tc["beta2"],
        eps=tc["eps"],
        seed=tc["seed"],
    )
    tag = f"{model_config.variant}_n{n_elements}"
    artifacts = [f"{tag}.ckpt", f"metrics_{tag}.csv", f"summary_{tag}.csv"]
    _write_manifest(out_dir, "train", cfg, artifacts)

    dataset = channel.windowize(
        channel.normalize(matrix, meta.stats), meta.window, meta.train_fraction
    )
    dataset.stats = meta.stats
    trained = models.train_model(model_config, dataset, train_config)
    filt = channel.build_correlation_filter(
        meta.normalized_doppler, meta.filter_length, meta.filter_window
    )
    held_out = models.test_rmse(
        trained,
        meta.geometry,
        filt,
        seed=meta.seed,
        segments=tc["test_segments"],
        segment_length=tc["test_segment_length"],
    )
    models.save_checkpoint(out_dir / f"{tag}.ckpt", trained)
    with open(out_dir / f"metrics_{tag}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_rmse", "val_rmse"])
        for epoch, (tr, va) in enumerate(zip(trained.train_history, trained.val_history), start=1):
            writer.writerow([epoch, repr(float(tr)), repr(float(va))])
    with open(out_dir / f"summary_{tag}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "n_elements", "seed", "train_rmse", "val_rmse", "test_rmse", "param_count"])
        writer.writerow(
            [
                model_config.variant,
                n_elements,
                train_config.seed,
                repr(float(trained.train_history[-1])),
                repr(float(trained.val_history[-1])),
                repr(float(held_out)),
                models.param_count(trained.model()),
            ]
        )
    print(
        f"trained {tag}: final train RMSE {trained.train_history[-1]:.5f}, "
        f"val {trained.val_history[-1]:.5f}, test {held_out:.5f}"
    )


# --- sweep ----------------------------------------------------------------


def _resolve_sweep(args, file_cfg: dict) -> dict:
    cfg = _merge(SCENARIO_DEFAULTS, file_cfg.get("scenario"), "scenario")
    cfg["geometry"] = _resolve_geometry(file_cfg.get("scenario", {}).get("geometry"))
    if getattr(args, "seed", None) is not None:
        cfg["seeds"] = [args.seed]
    if getattr(args, "n", None) is not None:
        cfg["power_sweep_n"] = args.n
        cfg["n_list"] = [args.n]
    kind = getattr(args, "kind", "both")
    if not getattr(args, "checkpoints", None):
        raise ConfigError("sweep needs --checkpoints pointing at trained model files")
    _scenario_from_cfg(cfg).correlation_filter()
    return {
        "scenario": cfg,
        "kind": kind,
        "checkpoints": str(args.checkpoints),
        "jobs": getattr(args, "jobs", None) or 1,
    }


def _scenario_from_cfg(cfg: dict) -> experiments.ScenarioConfig:
    return experiments.ScenarioConfig(
        geometry=channel.LinkGeometry(**cfg["geometry"]),
        noise_dbw=cfg["noise_dbw"],
        gamma_threshold=cfg["gamma_threshold"],
        powers_dbm=tuple(float(p) for p in cfg["powers_dbm"]),
        n_list=tuple(int(n) for n in cfg["n_list"]),
        element_sweep_power_dbm=cfg["element_sweep_power_dbm"],
        iterations=cfg["iterations"],
        segment_length=cfg["segment_length"],
        window=cfg["window"],
        normalized_doppler=cfg["normalized_doppler"],
        filter_length=cfg["filter_length"],
        filter_window=cfg["filter_window"],
        seeds=tuple(int(s) for s in cfg["seeds"]),
        direct_link=cfg["direct_link"],
    )


def _load_models_for(checkpoint_dir: Path, n_elements: int) -> dict[str, models.TrainedModel]:
    loaded = {}
    for scheme in ("transformer", "lstm", "dnn"):
        path = checkpoint_dir / f"{scheme}_n{n_elements}.ckpt"
        if not path.exists():
            raise ConfigError(f"missing checkpoint {path}")
        loaded[scheme] = models.load_checkpoint(path)
    return loaded


def _execute_sweep(cfg: dict, out_dir: Path) -> None:
    scenario = _scenario_from_cfg(cfg["scenario"])
    kind = cfg["kind"]
    checkpoint_dir = Path(cfg["checkpoints"])
    jobs = cfg["jobs"]
    artifacts = []
    if kind in ("power", "both"):
        artifacts += ["power_sweep.csv", "power_sweep_outage.svg", "power_sweep_rate.svg"]
    if kind in ("elements", "both"):
        artifacts += ["element_sweep.csv", "element_sweep_outage.svg", "element_sweep_rate.svg"]
    power_n = int(cfg["scenario"]["power_sweep_n"])
    by_n: dict[int, dict[str, models.TrainedModel]] = {}
    needed = set(scenario.n_list) if kind in ("elements", "both") else set()
    if kind in ("power", "both"):
        needed.add(power_n)
    for n in sorted(needed):
        by_n[n] = _load_models_for(checkpoint_dir, n)
    _write_manifest(out_dir, "sweep", cfg, artifacts)
    if kind in ("power", "both"):
        rows = experiments.run_power_sweep(scenario, power_n, by_n[power_n], jobs=jobs)
        experiments.write_sweep_csv(out_dir / "power_sweep.csv", rows)
        plots.render_sweep(out_dir / "power_sweep.csv", out_dir)
        print(f"wrote {out_dir / 'power_sweep.csv'} ({len(rows)} rows, N={power_n})")
    if kind in ("elements", "both"):
        rows = experiments.run_element_sweep(scenario, by_n, jobs=jobs)
        experiments.write_sweep_csv(out_dir / "element_sweep.csv", rows)
        plots.render_sweep(out_dir / "element_sweep.csv", out_dir)
        print(f"wrote {out_dir / 'element_sweep.csv'} ({len(rows)} rows)")


# --- report ---------------------------------------------------------------


def _resolve_report(args, file_cfg: dict) -> dict:
    sweeps = [str(p) for p in (getattr(args, "sweep_csv", None) or [])]
    metrics = [str(p) for p in (getattr(args, "metrics_csv", None) or [])]
    if not sweeps and not metrics:
        raise ConfigError("report needs --sweep-csv and/or --metrics-csv inputs")
    return {"sweep_csv": sweeps, "metrics_csv": metrics}


def _execute_report(cfg: dict, out_dir: Path) -> None:
    artifacts = []
    for path in cfg["sweep_csv"]:
        stem = Path(path).stem
        artifacts += [f"{stem}_outage.svg", f"{stem}_rate.svg"]
    for path in cfg["metrics_csv"]:
        artifacts.append(f"{Path(path).stem}_curves.svg")
    _write_manifest(out_dir, "report", cfg, artifacts)
    for path in cfg["sweep_csv"]:
        if not Path(path).exists():
            raise ConfigError(f"sweep CSV {path} does not exist")
        for written in plots.render_sweep(path, out_dir):
            print(f"wrote {written}")
    for path in cfg["metrics_csv"]:
        if not Path(path).exists():
            raise ConfigError(f"metrics CSV {path} does not exist")
        for written in plots.render_training(path, out_dir):
            print(f"wrote {written}")


# --- rerun ----------------------------------------------------------------

_EXECUTORS = {
    "generate": _execute_generate,
    "train": _execute_train,
    "sweep": _execute_sweep,
    "report": _execute_report,
}


def _execute_rerun(args) -> None:
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        raise ConfigError(f"manifest {manifest_path} does not exist")
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    if doc.get("format_version") != MANIFEST_VERSION:
        raise ConfigError(f"unsupported manifest format {doc.get('format_version')!r}")
    sub = doc.get("subcommand")
    if sub not in _EXECUTORS:
        raise ConfigError(f"manifest subcommand {sub!r} is not re-runnable")
    out_dir = _out_dir(args, f"rerun-{sub}")
    out_dir.mkdir(parents=True, exist_ok=True)
    _EXECUTORS[sub](doc["config"], out_dir)


# --- argument parsing -----------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riscast",
        description="RIS-assisted link simulator with learned CSI forecasting",
    )
    parser.add_argument("--version", action="version", version=f"riscast {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, seed=True, n=False, jobs=False):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help=f"output directory (default: ${OUT_ROOT_ENV} or ./runs)")
        if seed:
            p.add_argument("--seed", type=int, help="override the run seed")
        if n:
            p.add_argument("--n", type=int, help="override the RIS element count")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="worker processes for the Monte Carlo")

    p = subs.add_parser("generate", help="generate a correlated channel dataset")
    common(p, n=True)

    p = subs.add_parser("train", help="train one CSI predictor on a dataset")
    common(p)
    p.add_argument("--dataset", help="dataset CSV from the generate step")
    p.add_argument("--variant", choices=models.VARIANTS, help="predictor family")

    p = subs.add_parser("sweep", help="run Monte Carlo outage and rate sweeps")
    common(p, n=True, jobs=True)
    p.add_argument("--checkpoints", help="directory holding <variant>_n<N>.ckpt files")
    p.add_argument(
        "--kind", choices=("power", "elements", "both"), default="both", help="which sweep to run"
    )

    p = subs.add_parser("report", help="render figures from result CSVs")
    common(p, seed=False)
    p.add_argument("--sweep-csv", nargs="*", help="sweep CSVs to plot")
    p.add_argument("--metrics-csv", nargs="*", help="training metrics CSVs to plot")

    p = subs.add_parser("rerun", help="re-execute a recorded run manifest")
    p.add_argument("--manifest", required=True, help="manifest.json from a previous run")
    p.add_argument("--out", help="output directory for the reproduced artifacts")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "rerun":
            _execute_rerun(args)
            return 0
        file_cfg = _load_config_file(args.config)
        try:
            resolved = {
                "generate": _resolve_generate,
                "train": _resolve_train,
                "sweep": _resolve_sweep,
                "report": _resolve_report,
            }[args.subcommand](args, file_cfg)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        out_dir = _out_dir(args, args.subcommand)
        out_dir.mkdir(parents=True, exist_ok=True)
        _EXECUTORS[args.subcommand](resolved, out_dir)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RiscastError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
