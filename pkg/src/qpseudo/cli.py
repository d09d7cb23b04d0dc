"""Command-line entry point: ``qpseudo <command> [flags]``.

Commands: reconstruct, linkpred, nodeclass, analyze, geomcheck,
export-embeddings.  Settings come from built-in defaults, then an optional
``--config`` file of ``key=value`` lines, then explicit flags.  The
``QPSEUDO_SEED`` environment variable overrides the seed.

Every run writes into ``--out``.  Failures print a JSON error record to
stderr (and ``error.json`` when the output directory is usable) and exit
non-zero: 2 for usage errors, 1 for everything else.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .analysis import REFERENCE_MAX_DELTA, delta_hyperbolicity, sectional_curvature, write_histogram_csv
from .errors import QPseudoError
from .geomcheck import DEFAULT_BETAS, DEFAULT_SIGNATURES, run_suite
from .graph import load_graph
from .metrics import distortion
from .qgcn import ModelConfig, aggregation_matrix
from .records import write_embeddings, write_history, write_json
from .trainer import TrainConfig, load_checkpoint, save_checkpoint, train

TRAIN_COMMANDS = ("reconstruct", "linkpred", "nodeclass")
COMMANDS = TRAIN_COMMANDS + ("analyze", "geomcheck", "export-embeddings")

TRAIN_DEFAULTS = {
    "signature": (7, 3), "beta": -1.0, "layers": 1, "epochs": 500, "lr": 0.01,
    "curvature_lr": 1e-4, "weight_decay": 0.0, "dropout": 0.0, "activation": "elu",
    "aggregation": "sum", "patience": 100, "grad_clip": 200.0, "model": "qgcn",
    "negatives": 10, "eps": 0.02, "fd_r": 2.0, "fd_temp": 1.0, "skip": True,
    "split": None, "init_from": None, "features": None, "labels": None,
}
ANALYZE_DEFAULTS = {"mode": "sampled", "samples": 10_000, "dataset": None}
GEOM_DEFAULTS = {"signature": None, "beta": None, "samples": 10_000}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _signature(text: str) -> tuple[int, int]:
    try:
        s, t = (int(v) for v in str(text).split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"signature must look like 's,t', got {text!r}") from exc
    if s < 0 or t < 0 or s + t < 1:
        raise argparse.ArgumentTypeError(f"invalid signature {text!r}: need s, t >= 0 and s + t >= 1")
    return s, t


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _fractions(text: str) -> tuple[float, float, float]:
    parts = tuple(float(v) for v in str(text).split(","))
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("split needs three comma-separated fractions")
    return parts


CONVERTERS = {
    "signature": _signature, "beta": float, "layers": int, "epochs": int, "lr": float,
    "curvature_lr": float, "weight_decay": float, "dropout": float, "activation": str,
    "aggregation": str, "patience": int, "grad_clip": float, "model": str, "negatives": int,
    "eps": float, "fd_r": float, "fd_temp": float, "skip": _bool, "split": _fractions,
    "seed": int, "samples": int, "mode": str, "dataset": str, "edges": str, "features": str,
    "labels": str, "checkpoint": str, "init_from": str,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qpseudo", description="Pseudo-hyperboloid graph embedding toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS

    def common(sp):
        sp.add_argument("--seed", type=int, default=S)
        sp.add_argument("--config", default=S, help="key=value file; flags override it")
        sp.add_argument("--out", default=S, help="output directory (default: out)")

    for name in TRAIN_COMMANDS:
        sp = sub.add_parser(name, help=f"train a model for {name}")
        common(sp)
        sp.add_argument("--edges", default=S, help="whitespace-separated 'u v' edge list")
        sp.add_argument("--features", default=S, help="CSV feature matrix, one row per node")
        sp.add_argument("--labels", default=S, help="CSV 'id,label' rows")
        sp.add_argument("--signature", type=_signature, default=S, help="s,t of every layer")
        sp.add_argument("--beta", type=float, default=S, help="initial curvature (negative)")
        sp.add_argument("--layers", type=int, default=S)
        sp.add_argument("--epochs", type=int, default=S)
        sp.add_argument("--lr", type=float, default=S)
        sp.add_argument("--curvature-lr", dest="curvature_lr", type=float, default=S)
        sp.add_argument("--weight-decay", dest="weight_decay", type=float, default=S)
        sp.add_argument("--dropout", type=float, default=S)
        sp.add_argument("--activation", default=S, choices=["identity", "relu", "tanh", "sigmoid", "elu"])
        sp.add_argument("--aggregation", default=S, choices=["sum", "mean"])
        sp.add_argument("--patience", type=int, default=S)
        sp.add_argument("--grad-clip", dest="grad_clip", type=float, default=S)
        sp.add_argument("--model", default=S, choices=["qgcn", "euclidean"])
        sp.add_argument("--negatives", type=int, default=S)
        sp.add_argument("--eps", type=float, default=S)
        sp.add_argument("--split", type=_fractions, default=S)
        sp.add_argument("--init-from", dest="init_from", default=S,
                        help="checkpoint whose matching parameters warm-start training")

    sp = sub.add_parser("analyze", help="delta-hyperbolicity and sectional curvature")
    common(sp)
    sp.add_argument("--edges", default=S)
    sp.add_argument("--mode", default=S, choices=["sampled", "exact"])
    sp.add_argument("--samples", type=int, default=S)
    sp.add_argument("--dataset", default=S, help="name used to look up a published max delta")

    sp = sub.add_parser("geomcheck", help="run the geometry invariant suite")
    common(sp)
    sp.add_argument("--signature", type=_signature, default=S)
    sp.add_argument("--beta", type=float, default=S)
    sp.add_argument("--samples", type=int, default=S)

    sp = sub.add_parser("export-embeddings", help="write embeddings.csv from a checkpoint")
    common(sp)
    sp.add_argument("--checkpoint", default=S)
    sp.add_argument("--edges", default=S)
    return p


def read_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, val = (part.strip() for part in text.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONVERTERS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = CONVERTERS[key](val)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from exc
    return out


def resolve(args: argparse.Namespace) -> dict:
    defaults = {"seed": 0, "out": "out"}
    if args.command in TRAIN_COMMANDS:
        defaults.update(TRAIN_DEFAULTS)
    elif args.command == "analyze":
        defaults.update(ANALYZE_DEFAULTS)
    elif args.command == "geomcheck":
        defaults.update(GEOM_DEFAULTS)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    merged = {**defaults, **cfg, **flags}
    env_seed = os.environ.get("QPSEUDO_SEED")
    if env_seed not in (None, ""):
        try:
            merged["seed"] = int(env_seed)
        except ValueError as exc:
            raise UsageError(f"QPSEUDO_SEED must be an integer, got {env_seed!r}") from exc
    merged["command"] = args.command
    return merged


def _sha256(path) -> str | None:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _require(opts: dict, key: str) -> str:
    if not opts.get(key):
        raise UsageError(f"--{key.replace('_', '-')} is required for {opts['command']}")
    return opts[key]


def _configs(opts: dict, task: str):
    s, t = opts["signature"]
    if opts["layers"] < 1:
        raise UsageError("--layers must be at least 1")
    mc = ModelConfig(signatures=[(s, t)] * (opts["layers"] + 1), skip=opts["skip"], task=task,
                     activation=opts["activation"], fd_r=opts["fd_r"], fd_temp=opts["fd_temp"],
                     n_negatives=opts["negatives"], eps=opts["eps"],
                     aggregation=opts["aggregation"], init_beta=opts["beta"])
    split = opts["split"] or ((0.85, 0.05, 0.10) if task == "linkpred" else (0.70, 0.15, 0.15))
    tc = TrainConfig(task=task, epochs=opts["epochs"], lr=opts["lr"], curvature_lr=opts["curvature_lr"],
                     weight_decay=opts["weight_decay"], dropout=opts["dropout"], seed=opts["seed"],
                     split=split, patience=opts["patience"], model=opts["model"],
                     grad_clip=opts["grad_clip"] or None)
    return mc, tc


def cmd_train(opts: dict, out: Path) -> int:
    task = opts["command"]
    graph = load_graph(_require(opts, "edges"), opts.get("features"), opts.get("labels"))
    mc, tc = _configs(opts, task)
    if opts["beta"] >= 0:
        raise UsageError("--beta must be negative")
    init = load_checkpoint(opts["init_from"]).params if opts.get("init_from") else None
    start = time.perf_counter()
    res = train(graph, mc, tc, init_params=init)
    seconds = time.perf_counter() - start
    final = dict(res.metrics)
    if task == "reconstruct" and res.model.kind == "qgcn" and graph.is_connected():
        X = res.embeddings()
        D = np.asarray(res.model.pair_distance(res.params, X))
        final["distortion"] = distortion(D, graph).value
    record = {
        "task": task,
        "seed": tc.seed,
        "config_hash": res.config_hash,
        "config": {"model": dataclasses.asdict(res.model.config), "train": dataclasses.asdict(tc)},
        "inputs": {"edges_sha256": _sha256(opts["edges"]), "features_sha256": _sha256(opts.get("features")),
                   "labels_sha256": _sha256(opts.get("labels")), "graph": graph.report},
        "batching": res.batching,
        "final": final,
        "history": res.history,
    }
    write_json(out / "metrics.json", record)
    write_history(out / "history.csv", res.history)
    save_checkpoint(out / "checkpoint.npz", res.params, res.model.config, tc, res.features)
    write_json(out / "timing.json", {"wall_clock_seconds": seconds})
    print(json.dumps({"task": task, "final": {k: v for k, v in final.items()}}, default=float))
    return 0


def cmd_analyze(opts: dict, out: Path) -> int:
    graph = load_graph(_require(opts, "edges"))
    rng = np.random.default_rng(opts["seed"])
    hyp = delta_hyperbolicity(graph, opts["mode"], opts["samples"], rng, opts.get("dataset"))
    curv = sectional_curvature(graph, opts["samples"], rng)
    write_histogram_csv(hyp.histogram, out / "delta_histogram.csv")
    write_histogram_csv(curv.histogram, out / "curvature_histogram.csv")
    record = {
        "task": "analyze",
        "seed": opts["seed"],
        "inputs": {"edges_sha256": _sha256(opts["edges"]), "graph": graph.report},
        "delta": {"mode": hyp.mode, "max_delta": hyp.max_delta, "n_quadruples": hyp.n_quadruples,
                  "reference_max_delta": hyp.reference_max_delta},
        "curvature": {"mean": curv.mean, "std": curv.std, "n_samples": int(curv.values.size)},
    }
    if opts.get("dataset") and opts["dataset"].lower() not in REFERENCE_MAX_DELTA:
        record["delta"]["reference_note"] = f"no published value for {opts['dataset']!r}"
    write_json(out / "metrics.json", record)
    print(json.dumps({"max_delta": hyp.max_delta, "curvature_mean": curv.mean}))
    return 0


def cmd_geomcheck(opts: dict, out: Path) -> int:
    sigs = [opts["signature"]] if opts.get("signature") else list(DEFAULT_SIGNATURES)
    betas = [opts["beta"]] if opts.get("beta") is not None else list(DEFAULT_BETAS)
    if any(b >= 0 for b in betas):
        raise UsageError("--beta must be negative")
    report = run_suite(sigs, betas, n_samples=opts["samples"], n_coverage=10 * opts["samples"],
                       seed=opts["seed"])
    seconds = report.pop("seconds")
    write_json(out / "geomcheck.json", report)
    write_json(out / "timing.json", {"wall_clock_seconds": seconds})
    failed = [c for c in report["checks"] if not c["passed"]]
    print(json.dumps({"passed": report["passed"], "n_checks": len(report["checks"]),
                      "failed": failed}))
    return 0 if report["passed"] else 1


def cmd_export(opts: dict, out: Path) -> int:
    ck = load_checkpoint(_require(opts, "checkpoint"))
    graph = load_graph(_require(opts, "edges"))
    if ck.features is None or len(ck.features) != graph.n_nodes:
        raise UsageError("checkpoint features do not match the graph's node count")
    from .models import build_model

    model = build_model(ck.train_config.model, ck.model_config, ck.features.shape[1])
    agg = aggregation_matrix(graph.n_nodes, graph.edges, ck.model_config.aggregation)
    X = np.asarray(model.forward(ck.params, ck.features, agg))
    write_embeddings(out / "embeddings.csv", X)
    print(json.dumps({"embeddings": str(out / "embeddings.csv"), "shape": list(X.shape)}))
    return 0


HANDLERS = {"analyze": cmd_analyze, "geomcheck": cmd_geomcheck, "export-embeddings": cmd_export}


def _error_record(kind: str, exc: BaseException, command: str | None, out: Path | None) -> None:
    rec = {"status": "error", "kind": kind, "error": type(exc).__name__, "message": str(exc),
           "command": command}
    sys.stderr.write(json.dumps(rec) + "\n")
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "error.json", rec)
        except OSError:
            pass


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = None
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        opts = resolve(args)
        out = Path(opts["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").unlink(missing_ok=True)
        handler = HANDLERS.get(command, cmd_train)
        return handler(opts, out)
    except UsageError as exc:
        _error_record("usage", exc, command, out)
        return 2
    except (QPseudoError, OSError, ValueError, KeyError) as exc:
        _error_record("runtime", exc, command, out)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
