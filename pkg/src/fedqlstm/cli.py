"""Command-line front end: train, federate, evaluate, selftest, sweep-nodes.

Every run writes a JSON manifest (resolved config, data fingerprint,
parameter count, metrics, wall time) plus CSV reports into its own run
directory; figures are rendered next to the CSVs unless --no-figures is
given. All outputs are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .config import (
    AGGREGATION_CHOICES,
    ENCODINGS_TRAINABLE,
    ENTANGLER_CHOICES,
    FEATURE_SUBSETS,
    MODEL_KINDS,
    NORMALIZATION_CHOICES,
    OUTPUT_HEAD_CHOICES,
    RECURRENT_INPUT_CHOICES,
    SAMPLE_CHOICES,
    RunConfig,
    build_config,
    config_hash,
    parse_config_file,
    resolve_config,
)
from .data import Dataset, apply_normalization, load_csv, normalize_fit_transform, resolve_subset, select_features, split
from .errors import ConfigError, FedqlstmError, ShapeError
from .federated import ROUND_LOG_COLUMNS, FedConfig, run_federation, train_centralized
from .figures import save_loss_figure, save_roc_figure, save_rounds_figure, save_sweep_figure
from .selftest import format_report, run_selftest
from .training import build_model, dataset_to_arrays, derive_rng, evaluate_model, snapshot_parameters


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload: dict) -> None:
    _write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: str, header: tuple, rows: list) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    _write_text_atomic(path, buf.getvalue())


# ----------------------------------------------------------------- arguments


def _add_run_arguments(parser: argparse.ArgumentParser, federated: bool) -> None:
    parser.add_argument("--data", required=True, help="path to the SUSY-layout CSV")
    parser.add_argument("--out", required=True, help="output directory for run artifacts")
    parser.add_argument("--config", help="flat key=value config file; CLI flags override it")
    parser.add_argument("--model", choices=MODEL_KINDS, help="model kind (default qlstm)")
    parser.add_argument("--features", choices=FEATURE_SUBSETS, help="feature subset (default low7)")
    parser.add_argument("--qubits", type=int, help="qubits per circuit (default 6)")
    parser.add_argument("--layers", type=int, help="trainable layers (default 4; 3 for full18)")
    parser.add_argument("--hidden-dim", type=int, help="recurrent hidden width (default 1)")
    parser.add_argument("--epochs", type=int, help="training epochs (default 30)")
    parser.add_argument("--lr", type=float, help="Adam learning rate (default 0.01)")
    parser.add_argument("--batch-size", type=int, help="minibatch size (default 32)")
    parser.add_argument("--seed", type=int, help="experiment seed (default 0)")
    parser.add_argument("--window", type=int, help="sequence window (default 1)")
    parser.add_argument("--encoding", choices=ENCODINGS_TRAINABLE, help="feature encoding (default angle_rx)")
    parser.add_argument("--entangler", choices=ENTANGLER_CHOICES, help="entangler pattern (default cnot_ring)")
    parser.add_argument("--recurrent-input", choices=RECURRENT_INPUT_CHOICES,
                        help="cell input: literal x_t or [h;x] concatenation (default input_only)")
    parser.add_argument("--gate-activation", action=argparse.BooleanOptionalAction, default=None,
                        help="sigmoid/tanh on the gate outputs (default on)")
    parser.add_argument("--output-head", choices=OUTPUT_HEAD_CHOICES,
                        help="read the output head from the cell or hidden state (default cell)")
    parser.add_argument("--normalization", choices=NORMALIZATION_CHOICES, help="feature scaling (default minmax)")
    parser.add_argument("--max-rows", type=int, help="rows ingested from the CSV (default 20000)")
    parser.add_argument("--has-header", action=argparse.BooleanOptionalAction, default=None,
                        help="first CSV line is a header (default off)")
    parser.add_argument("--sample", choices=SAMPLE_CHOICES, help="row sampling: head of file or seeded random")
    parser.add_argument("--split-ratio", type=float, help="train fraction (default 0.8)")
    parser.add_argument("--repeats", type=int, default=1,
                        help="repeat with seeds seed..seed+N-1 and report mean +/- sample std")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    if federated:
        parser.add_argument("--nodes", type=int, help="federation size (default 3)")
        parser.add_argument("--rounds", type=int, help="global rounds (default 5)")
        parser.add_argument("--local-epochs", type=int, help="local epochs per round (default 30)")
        parser.add_argument("--aggregation", choices=AGGREGATION_CHOICES,
                            help="snapshot weighting (default sample_weighted)")


_ARG_TO_FIELD = {
    "model": "model_kind",
    "features": "feature_subset",
    "qubits": "n_qubits",
    "layers": "n_layers",
    "hidden_dim": "hidden_dim",
    "epochs": "epochs",
    "lr": "lr",
    "batch_size": "batch_size",
    "seed": "seed",
    "window": "window",
    "encoding": "encoding",
    "entangler": "entangler",
    "recurrent_input": "recurrent_input",
    "gate_activation": "gate_activation",
    "output_head": "output_head_source",
    "normalization": "normalization",
    "max_rows": "max_rows",
    "has_header": "has_header",
    "sample": "sample",
    "split_ratio": "split_ratio",
    "nodes": "n_nodes",
    "rounds": "global_rounds",
    "local_epochs": "local_epochs",
    "aggregation": "aggregation",
}


def _config_from_args(args: argparse.Namespace, federated: bool) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else None
    overrides = {}
    for arg, field in _ARG_TO_FIELD.items():
        if hasattr(args, arg) and getattr(args, arg) is not None:
            overrides[field] = getattr(args, arg)
    return build_config(file_values, overrides, with_fed=federated)


# ------------------------------------------------------------- data pipeline


def _prepare_data(config: RunConfig, data_path: str):
    ingested = load_csv(
        data_path,
        config.max_rows,
        has_header=config.has_header,
        sample=config.sample,
        seed=config.seed,
    )
    fingerprint = ingested.fingerprint()
    subset = resolve_subset(config.feature_subset, ingested.feature_names)
    selected = select_features(ingested, subset)
    train, test = split(selected, config.split_ratio, config.seed)
    train, test, stats = normalize_fit_transform(train, test, config.normalization)
    data_info = {
        "path": os.path.abspath(data_path),
        "fingerprint": fingerprint,
        "n_rows": len(ingested),
        "n_train": len(train),
        "n_test": len(test),
        "feature_subset": config.feature_subset,
        "feature_names": list(train.feature_names),
        "normalization": stats,
    }
    return train, test, stats, data_info


def _run_id(config: RunConfig, command: str) -> str:
    tag = config_hash(config)[:8]
    return f"{command}-{config.model_kind}-{config.feature_subset}-seed{config.seed}-{tag}"


def _base_manifest(command: str, config: RunConfig, notes: list, data_info: dict, model) -> dict:
    return {
        "package_version": __version__,
        "command": command,
        "run_id": _run_id(config, command),
        "config_hash": config_hash(config),
        "config": config.to_dict(),
        "adjustments": notes,
        "data": data_info,
        "param_count": model.param_count(),
        "seed": config.seed,
    }


def _finish_run(run_dir, manifest, model, config, stats, feature_names, eval_result, figures):
    os.makedirs(run_dir, exist_ok=True)
    checkpoint_path = os.path.join(run_dir, "checkpoint.fqc")
    save_checkpoint(
        checkpoint_path,
        model_kind=config.model_kind,
        config=config.to_dict(),
        params=snapshot_parameters(model),
        normalization=stats,
        feature_names=feature_names,
        extra={"config_hash": config_hash(config)},
    )
    roc_path = os.path.join(run_dir, "roc.csv")
    _write_csv(roc_path, ("threshold", "fpr", "tpr"), eval_result.roc_rows)
    manifest["final"] = {"test_auc": eval_result.auc, "test_accuracy": eval_result.accuracy}
    manifest["artifacts"] = {"checkpoint": checkpoint_path, "roc_csv": roc_path}
    if figures:
        fig_dir = os.path.join(run_dir, "figures")
        os.makedirs(fig_dir, exist_ok=True)
        roc_fig = os.path.join(fig_dir, "roc.png")
        fpr = [row[1] for row in eval_result.roc_rows]
        tpr = [row[2] for row in eval_result.roc_rows]
        save_roc_figure(roc_fig, [(config.model_kind, fpr, tpr, eval_result.auc)],
                        title=f"{config.model_kind} / {config.feature_subset}")
        manifest["artifacts"]["roc_figure"] = roc_fig
    return manifest


# ------------------------------------------------------------------ commands


def cmd_train(args: argparse.Namespace) -> int:
    base_config = _config_from_args(args, federated=False)
    finals = []
    for repeat in range(args.repeats):
        config, notes = resolve_config(replace(base_config, seed=base_config.seed + repeat))
        started = time.perf_counter()
        train_ds, test_ds, stats, data_info = _prepare_data(config, args.data)
        result = train_centralized(config, train_ds, test_ds)
        run_dir = os.path.join(args.out, _run_id(config, "train"))
        manifest = _base_manifest("train", config, notes, data_info, result.model)
        manifest["epoch_train_loss"] = result.losses
        manifest = _finish_run(run_dir, manifest, result.model, config, stats,
                               train_ds.feature_names, result.final, not args.no_figures)
        metrics_path = os.path.join(run_dir, "metrics.csv")
        _write_csv(metrics_path, ("epoch", "train_loss"),
                   [(i + 1, loss) for i, loss in enumerate(result.losses)])
        manifest["artifacts"]["metrics_csv"] = metrics_path
        if not args.no_figures and result.losses:
            loss_fig = os.path.join(run_dir, "figures", "loss.png")
            save_loss_figure(loss_fig, result.losses, title=f"{config.model_kind} training loss")
            manifest["artifacts"]["loss_figure"] = loss_fig
        manifest["wall_time_s"] = time.perf_counter() - started
        _write_json(os.path.join(run_dir, "manifest.json"), manifest)
        finals.append(manifest["final"])
        print(f"{manifest['run_id']}: params={manifest['param_count']} "
              f"test_auc={result.final.auc:.4f} test_accuracy={result.final.accuracy:.4f}")
    if args.repeats > 1:
        _write_repeat_summary(args.out, base_config, finals)
    return 0


def _write_repeat_summary(out_dir: str, config: RunConfig, finals: list) -> None:
    aucs = np.array([f["test_auc"] for f in finals])
    accs = np.array([f["test_accuracy"] for f in finals])
    summary = {
        "repeats": len(finals),
        "seeds": [config.seed + i for i in range(len(finals))],
        "test_auc_mean": float(aucs.mean()),
        "test_auc_sample_std": float(aucs.std(ddof=1)),
        "test_accuracy_mean": float(accs.mean()),
        "test_accuracy_sample_std": float(accs.std(ddof=1)),
        "per_repeat": finals,
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    print(f"repeats: test_auc = {summary['test_auc_mean']:.4f} +/- {summary['test_auc_sample_std']:.4f} "
          f"(sample std over {len(finals)} runs)")


def _run_one_federation(args, config: RunConfig, notes: list):
    started = time.perf_counter()
    train_ds, test_ds, stats, data_info = _prepare_data(config, args.data)
    fed = FedConfig(
        n_nodes=config.fed.n_nodes,
        global_rounds=config.fed.global_rounds,
        local_epochs=config.fed.local_epochs,
        aggregation=config.fed.aggregation,
        seed=config.seed,
    )
    run_dir = os.path.join(args.out, _run_id(config, "federate"))
    os.makedirs(run_dir, exist_ok=True)
    rounds_path = os.path.join(run_dir, "rounds.csv")
    with open(rounds_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROUND_LOG_COLUMNS)
        fh.flush()
        result = run_federation(fed, config, train_ds, test_ds,
                                on_round=lambda m: (writer.writerow(m.row()), fh.flush()))
    manifest = _base_manifest("federate", config, notes, data_info, result.model)
    manifest["rounds"] = [dict(zip(ROUND_LOG_COLUMNS, m.row())) for m in result.rounds]
    manifest = _finish_run(run_dir, manifest, result.model, config, stats,
                           train_ds.feature_names, result.final, not args.no_figures)
    manifest["artifacts"]["rounds_csv"] = rounds_path
    if not args.no_figures:
        rounds_fig = os.path.join(run_dir, "figures", "rounds.png")
        save_rounds_figure(rounds_fig, result.rounds,
                           title=f"{config.model_kind} x {fed.n_nodes} nodes")
        manifest["artifacts"]["rounds_figure"] = rounds_fig
    manifest["wall_time_s"] = time.perf_counter() - started
    _write_json(os.path.join(run_dir, "manifest.json"), manifest)
    print(f"{manifest['run_id']}: nodes={fed.n_nodes} rounds={fed.global_rounds} "
          f"test_auc={result.final.auc:.4f} test_accuracy={result.final.accuracy:.4f}")
    return manifest, result


def cmd_federate(args: argparse.Namespace) -> int:
    base_config = _config_from_args(args, federated=True)
    finals = []
    for repeat in range(args.repeats):
        config, notes = resolve_config(replace(base_config, seed=base_config.seed + repeat))
        manifest, _ = _run_one_federation(args, config, notes)
        finals.append(manifest["final"])
    if args.repeats > 1:
        _write_repeat_summary(args.out, base_config, finals)
    return 0


def cmd_sweep_nodes(args: argparse.Namespace) -> int:
    base_config = _config_from_args(args, federated=True)
    try:
        node_counts = [int(v) for v in args.nodes_list.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--nodes-list must be comma-separated integers, got {args.nodes_list!r}") from None
    if not node_counts:
        raise ConfigError("--nodes-list is empty")
    sweep_rows = []
    for n_nodes in node_counts:
        config = replace(base_config, fed=replace(base_config.fed, n_nodes=n_nodes))
        config, notes = resolve_config(config)
        manifest, result = _run_one_federation(args, config, notes)
        sweep_rows.append((n_nodes, result.final.auc, result.final.accuracy))
    sweep_csv = os.path.join(args.out, "sweep.csv")
    _write_csv(sweep_csv, ("n_nodes", "test_auc", "test_accuracy"), sweep_rows)
    if not args.no_figures:
        save_sweep_figure(os.path.join(args.out, "sweep.png"), sweep_rows,
                          title=f"{base_config.model_kind} node sweep")
    print(f"sweep complete: {len(sweep_rows)} settings -> {sweep_csv}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    config, _ = resolve_config(RunConfig.from_dict(ckpt.config))
    ingested = load_csv(
        args.data, config.max_rows, has_header=config.has_header,
        sample=config.sample, seed=config.seed,
    )
    try:
        subset = resolve_subset(config.feature_subset, ingested.feature_names)
        selected = select_features(ingested, subset)
    except ConfigError as exc:
        raise ConfigError(
            f"checkpoint expects feature subset {config.feature_subset!r} "
            f"({exc}); check the data file's columns"
        ) from exc
    if args.all:
        eval_ds = selected
    else:
        _, eval_ds = split(selected, config.split_ratio, config.seed)
    eval_ds = apply_normalization(eval_ds, ckpt.normalization)
    model = build_model(config, len(subset.indices), derive_rng(config.seed, 0))
    try:
        model.set_parameters(ckpt.params)
    except ShapeError as exc:
        raise ConfigError(
            f"checkpoint parameters do not fit a {config.model_kind}/{config.feature_subset} "
            f"model: {exc}"
        ) from exc
    X, y = dataset_to_arrays(eval_ds, config.window)
    result = evaluate_model(model, X, y)
    out_dir = args.out or os.path.dirname(os.path.abspath(args.checkpoint))
    metrics_path = os.path.join(out_dir, "eval_metrics.csv")
    _write_csv(metrics_path, ("metric", "value"),
               [("test_auc", result.auc), ("test_accuracy", result.accuracy), ("n_samples", len(y))])
    roc_path = os.path.join(out_dir, "eval_roc.csv")
    _write_csv(roc_path, ("threshold", "fpr", "tpr"), result.roc_rows)
    if not args.no_figures:
        fpr = [row[1] for row in result.roc_rows]
        tpr = [row[2] for row in result.roc_rows]
        save_roc_figure(os.path.join(out_dir, "eval_roc.png"),
                        [(ckpt.model_kind, fpr, tpr, result.auc)], title="evaluation ROC")
    print(f"test_auc={result.auc:.6f} test_accuracy={result.accuracy:.6f} n={len(y)}")
    return 0


def cmd_selftest(args: argparse.Namespace) -> int:
    results = run_selftest()
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_make_data(args: argparse.Namespace) -> int:
    from .synth import generate_susy_like, write_susy_csv

    dataset = generate_susy_like(args.rows, seed=args.seed)
    write_susy_csv(args.out, dataset, header=args.header)
    positives = int(dataset.labels.sum())
    print(f"wrote {len(dataset)} rows ({positives} signal) to {args.out}")
    return 0


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedqlstm",
        description="Quantum-enhanced LSTM, VQC and LSTM baselines on SUSY-format data, "
                    "trained centrally or by simulated federated averaging.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="centralized training run")
    _add_run_arguments(p_train, federated=False)
    p_train.set_defaults(func=cmd_train)

    p_fed = sub.add_parser("federate", help="simulated federated training run")
    _add_run_arguments(p_fed, federated=True)
    p_fed.set_defaults(func=cmd_federate)

    p_sweep = sub.add_parser("sweep-nodes", help="federated runs over a list of node counts")
    _add_run_arguments(p_sweep, federated=True)
    p_sweep.add_argument("--nodes-list", default="2,3,5,10", help="comma-separated node counts")
    p_sweep.set_defaults(func=cmd_sweep_nodes)

    p_eval = sub.add_parser("evaluate", help="evaluate a checkpoint on a data file")
    p_eval.add_argument("--checkpoint", required=True, help="path to a .fqc checkpoint")
    p_eval.add_argument("--data", required=True, help="path to the SUSY-layout CSV")
    p_eval.add_argument("--out", help="output directory (default: checkpoint's directory)")
    p_eval.add_argument("--all", action="store_true",
                        help="evaluate on all ingested rows instead of the run's test split")
    p_eval.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p_eval.set_defaults(func=cmd_evaluate)

    p_self = sub.add_parser("selftest", help="run the fast oracle suite")
    p_self.set_defaults(func=cmd_selftest)

    p_make = sub.add_parser("make-data", help="generate a synthetic SUSY-layout CSV")
    p_make.add_argument("--out", required=True, help="output CSV path")
    p_make.add_argument("--rows", type=int, default=20000, help="number of rows (default 20000)")
    p_make.add_argument("--seed", type=int, default=0, help="generator seed")
    p_make.add_argument("--header", action="store_true", help="write a header line")
    p_make.set_defaults(func=cmd_make_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FedqlstmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
