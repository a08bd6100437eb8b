"""Command-line entry point: ``qfeature <command> [options]``.

Commands: preprocess, train, evaluate, noise-sweep, baseline, ttest, report.

Every command writes its outputs plus ``<command>.manifest.json`` into
``--out`` (default ``.``).  Options may also come from a flat ``key = value``
file passed with ``--config``; explicit flags win over the file.

Exit status:
  0  all outputs written
  1  unexpected internal error
  2  usage error (including a bad --config file) or missing input file
  3  invalid input data or model/data mismatch
"""
from __future__ import annotations

import argparse
import csv
import glob
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import REFERENCE_SCORES, knn_fit, knn_predict, logreg_train
from .data import PROFILES, DataError, load_profile_csv, preprocess, read_feature_csv
from .metrics import confusion_and_metrics, ttest_to_dict, welch_t_test
from .model import (
    GATE,
    MODES,
    STAGE,
    ModelConfig,
    evaluate,
    holdout_split,
    load_model,
    model_to_dict,
    noise_sweep,
    train,
)
from .noise import CHANNEL_KINDS, NOISE_GRID, build_channel
from .optimize import COBYLA, NELDER_MEAD, OptimizerConfig
from .seeding import derive_seed

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INTERNAL, EXIT_MISSING, EXIT_INVALID = 0, 1, 2, 3


class UsageError(Exception):
    pass


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input file not found: {p}")
    return p


class Run:
    """Collects inputs/outputs of one command and writes its manifest last."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, dict] = {}
        self.started = time.perf_counter()

    def input(self, path) -> Path:
        p = _require_file(path)
        self.inputs[str(p)] = sha256_file(p)
        return p

    def write(self, name: str, text: str) -> Path:
        path = atomic_write_text(self.out / name, text)
        self.outputs[name] = {"path": str(path), "sha256": sha256_file(path)}
        return path

    def finish(self) -> Path:
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "command": self.args.command,
            "config": config,
            "seed": self.args.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_seconds": round(time.perf_counter() - self.started, 6),
        }
        return atomic_write_text(self.out / f"{self.args.command}.manifest.json", _json_text(manifest))


def _metrics_doc(cm, report, extra=None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "metrics": report.as_dict(),
        "confusion": asdict(cm),
    }
    doc.update(extra or {})
    return doc


def cmd_preprocess(args) -> int:
    run = Run(args)
    raw = load_profile_csv(run.input(args.input), args.profile)
    fm = preprocess(raw, args.profile, args.seed, args.samples, args.components, args.k_neighbors)
    rows = [[repr(float(v)) for v in row] + [int(lab)] for row, lab in zip(fm.x, fm.y)]
    run.write("features.csv", _csv_text([*fm.names, "label"], rows))
    run.write("preprocess_notes.json", _json_text({"schema_version": SCHEMA_VERSION, **fm.notes}))
    run.finish()
    print(f"wrote {fm.n_rows} x {len(fm.names)} features to {run.out / 'features.csv'}")
    return EXIT_OK


def cmd_train(args) -> int:
    run = Run(args)
    fm = read_feature_csv(run.input(args.data))
    if args.holdout > 0:
        fm, test = holdout_split(fm, args.holdout, derive_seed(args.seed, "holdout"))
        rows = [[repr(float(v)) for v in row] + [int(lab)] for row, lab in zip(test.x, test.y)]
        run.write("holdout.csv", _csv_text([*test.names, "label"], rows))
    config = ModelConfig(
        n_qubits=args.qubits, mode=args.mode, share_pqc_params=args.share_pqc,
        iteration_budget=args.iterations, seed=args.seed, noise_placement=args.placement,
    )
    opt = OptimizerConfig(
        method=args.optimizer, rho_begin=args.rho_begin, rho_end=args.rho_end,
        max_evaluations=args.max_evaluations, iteration_budget=args.iterations, seed=args.seed,
    )
    model = train(fm, config, opt)
    run.write("model.json", json.dumps(model_to_dict(model), indent=2) + "\n")
    run.write("trace.csv", _csv_text(
        ["iteration", "loss", "accuracy"],
        [[i, repr(lo), repr(acc)] for i, lo, acc in model.trace],
    ))
    run.finish()
    print(f"mode={config.mode} best accuracy {model.trace[-1][2]:.4f} "
          f"after {model.evaluations} evaluations")
    return EXIT_OK


def _noise_from_args(args):
    if args.channel is None:
        if args.strength:
            raise UsageError("--strength needs --channel")
        return None
    return build_channel(args.channel, args.strength)


def _check_dims(model, fm) -> None:
    if fm.x.shape[1] != model.centroids.shape[1]:
        raise DataError(
            f"data has {fm.x.shape[1]} features but the model was trained on "
            f"{model.centroids.shape[1]}"
        )


def cmd_evaluate(args) -> int:
    run = Run(args)
    model = load_model(run.input(args.model))
    fm = read_feature_csv(run.input(args.data))
    _check_dims(model, fm)
    noise = _noise_from_args(args)
    cm, report = evaluate(model, fm, noise)
    extra = {"noise": None if noise is None else {"channel": noise.kind, "strength": noise.strength},
             "mode": model.config.mode}
    run.write("metrics.json", _json_text(_metrics_doc(cm, report, extra)))
    run.write("confusion.csv", _csv_text(
        ["actual", "predicted_0", "predicted_1"],
        [[0, cm.tn, cm.fp], [1, cm.fn, cm.tp]],
    ))
    run.finish()
    print(f"accuracy {report.accuracy:.4f} precision {report.precision:.4f} "
          f"recall {report.recall:.4f} f1 {report.f1:.4f}")
    return EXIT_OK


def _split_list(text: str, convert=str) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError("empty list")
    return [convert(t) for t in items]


def cmd_noise_sweep(args) -> int:
    run = Run(args)
    model = load_model(run.input(args.model))
    fm = read_feature_csv(run.input(args.data))
    _check_dims(model, fm)
    channels = _split_list(args.channels)
    unknown = [c for c in channels if c not in CHANNEL_KINDS]
    if unknown:
        raise UsageError(f"unknown channel(s) {unknown}; choose from {list(CHANNEL_KINDS)}")
    grid = _split_list(args.grid, float) if args.grid else list(NOISE_GRID)
    if args.placement:
        model.config = replace(model.config, noise_placement=args.placement)
    rows = noise_sweep(model, fm, channels, grid, workers=args.workers)
    run.write("sweep.csv", _csv_text(
        ["channel", "strength", "accuracy"],
        [[kind, f"{p:.2f}", repr(acc)] for kind, p, acc in rows],
    ))
    run.finish()
    print(f"wrote {len(rows)} sweep rows to {run.out / 'sweep.csv'}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    run = Run(args)
    fm = read_feature_csv(run.input(args.data))
    if len(np.unique(fm.y)) < 2:
        raise DataError("baseline training data must contain both classes")
    if args.model == "lr":
        clf = logreg_train(fm.x, fm.y, args.l2, args.step, args.lr_iterations)
        pred = clf.predict(fm.x)
        params = {"l2_strength": args.l2, "step": args.step, "max_iterations": args.lr_iterations}
    else:
        pred = knn_predict(knn_fit(fm.x, fm.y, args.k), fm.x)
        params = {"k": args.k}
    cm, report = confusion_and_metrics(pred, fm.y)
    run.write(f"baseline_{args.model}.json",
              _json_text(_metrics_doc(cm, report, {"model": args.model, "params": params})))
    run.finish()
    print(f"{args.model} accuracy {report.accuracy:.4f}")
    return EXIT_OK


def _read_metric(path: Path, metric: str) -> float:
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from None
    source = doc.get("metrics", doc)
    if metric not in source:
        raise DataError(f"{path}: no {metric!r} field")
    return float(source[metric])


def _expand(pattern: str) -> list[Path]:
    return [Path(p) for p in sorted(glob.glob(pattern))]


def cmd_ttest(args) -> int:
    run = Run(args)
    sides = {}
    for side, pattern in (("a", args.a), ("b", args.b)):
        files = _expand(pattern)
        if len(files) < 2:
            raise DataError(f"side {side}: pattern {pattern!r} matched {len(files)} file(s), need >= 2")
        sides[side] = [_read_metric(run.input(f), args.metric) for f in files]
    result = welch_t_test(sides["a"], sides["b"])
    doc = {"schema_version": SCHEMA_VERSION, "metric": args.metric,
           "samples_a": sides["a"], "samples_b": sides["b"], **ttest_to_dict(result)}
    run.write("ttest.json", _json_text(doc))
    run.finish()
    t = result.t_statistic
    print(f"t = {t if math.isfinite(t) else ('inf' if t > 0 else '-inf')} p = {result.p_value:.4g}")
    return EXIT_OK


def format_table(header, rows) -> str:
    """Plain-text table with left-aligned text and 4-decimal right-aligned numbers."""
    def cell(v):
        try:
            return f"{float(v):.4f}"
        except ValueError:
            return str(v)

    body = [[cell(v) if i >= 2 else str(v) for i, v in enumerate(r)] for r in rows]
    widths = [max(len(str(h)), *(len(r[i]) for r in body)) for i, h in enumerate(header)]
    fmt = lambda r: "  ".join(
        v.ljust(w) if i < 2 else v.rjust(w) for i, (v, w) in enumerate(zip(r, widths))
    ).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths]), *map(fmt, body)]
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    run = Run(args)
    rows = []
    for pattern in args.inputs:
        files = _expand(pattern)
        if not files:
            raise FileNotFoundError(f"input file not found: no match for {pattern!r}")
        for f in files:
            m = {k: _read_metric(run.input(f), k) for k in ("accuracy", "precision", "recall", "f1")}
            rows.append([f.stem if f.parent == Path(".") else f"{f.parent.name}/{f.stem}",
                         "measured", *[repr(m[k]) for k in ("accuracy", "precision", "recall", "f1")]])
    if args.dataset:
        for name, values in REFERENCE_SCORES[args.dataset].items():
            rows.append([name, "published", *[repr(v) for v in values]])
    header = ["model", "source", "accuracy", "precision", "recall", "f1"]
    run.write("report.csv", _csv_text(header, rows))
    run.write("report.txt", format_table(header, rows))
    run.finish()
    print(f"wrote {len(rows)} report rows to {run.out / 'report.csv'}")
    return EXIT_OK


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="top-level RNG seed")
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--out", default=".", help="output directory")

    parser = argparse.ArgumentParser(prog="qfeature", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("preprocess", cmd_preprocess, "clean, balance, subsample and project a source CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--profile", required=True, choices=sorted(PROFILES))
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--components", type=int, default=7)
    p.add_argument("--k-neighbors", type=int, default=5)

    p = add("train", cmd_train, "train the classifier on a processed CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--iterations", type=int, default=10, help="optimizer iteration budget")
    p.add_argument("--qubits", type=int, default=3)
    p.add_argument("--share-pqc", action="store_true", help="reuse one angle set for both PQCs")
    p.add_argument("--optimizer", choices=(COBYLA, NELDER_MEAD), default=COBYLA)
    p.add_argument("--rho-begin", type=float, default=1.0)
    p.add_argument("--rho-end", type=float, default=1e-4)
    p.add_argument("--max-evaluations", type=int, default=1000)
    p.add_argument("--placement", choices=(STAGE, GATE), default=STAGE,
                   help="where noise is inserted when the model is later evaluated")
    p.add_argument("--holdout", type=float, default=0.0,
                   help="fraction held out for testing (0 trains and tests on all rows)")

    p = add("evaluate", cmd_evaluate, "score a trained model on a processed CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--channel", choices=CHANNEL_KINDS)
    p.add_argument("--strength", type=float, default=0.0)

    p = add("noise-sweep", cmd_noise_sweep, "accuracy over noise channels and strengths")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--channels", default=",".join(CHANNEL_KINDS))
    p.add_argument("--grid", default="", help="comma-separated strengths (default 0.00..0.99 step 0.11)")
    p.add_argument("--placement", choices=(STAGE, GATE), default=None)
    p.add_argument("--workers", type=int, default=1)

    p = add("baseline", cmd_baseline, "fit and score a classical baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=("lr", "knn"), required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--lr-iterations", type=int, default=1000)

    p = add("ttest", cmd_ttest, "Welch t-test between two sets of metric files")
    p.add_argument("--a", required=True, help="glob of metric JSON files")
    p.add_argument("--b", required=True, help="glob of metric JSON files")
    p.add_argument("--metric", default="accuracy")

    p = add("report", cmd_report, "tabulate metric files next to reference scores")
    p.add_argument("--inputs", nargs="+", required=True, help="metric JSON files or globs")
    p.add_argument("--dataset", choices=sorted(REFERENCE_SCORES))
    return parser, subs


def read_config(path) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(_require_file(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(sub: argparse.ArgumentParser, values: dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, value in values.items():
        if key not in actions:
            raise UsageError(f"config key {key!r} is not an option of this command")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} expects a boolean")
            defaults[key] = value.lower() in ("true", "1", "yes")
        else:
            defaults[key] = value  # argparse applies ``type`` to string defaults
        action.required = False
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        command = next((tok for tok in argv if tok in subs), None)
        if known.config and command:
            _apply_config(subs[command], read_config(known.config))
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_MISSING
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
