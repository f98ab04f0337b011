"""Command-line driver: ``declcf <subcommand> ...``.

Exit codes: 0 success, 2 usage or input error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__
from .declare import (DeclareModel, discover, load_model, model_from_json, model_to_json,
                      parse_constraint, save_model)
from .encoding import EncodingKind
from .errors import DataError, DeclcfError, InputError
from .evaluation import SCHEMA_VERSION, aggregate, evaluate_set, read_rows, write_aggregate, write_plot_data
from .event_log import label_log, write_csv
from .ga.engine import GAConfig, Mode
from .pipeline import PipelineConfig, explain, fit_predictor, load_log, prepare, run_bench
from .predictor import DEFAULT_GRID, Hyperparams, RandomForestModel
from .synthesis import SynthesisSpec, synthesize_log

EXIT_OK, EXIT_INPUT, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
ROW_KEYS = {"dataset", "encoding", "prefix_length", "k", "method", "seed", "query_index"}


def _out(args, default_name: str) -> Path:
    path = Path(args.out) if args.out else Path(default_name)
    if not path.is_absolute():
        path = Path(args.output_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_synth(args) -> int:
    log = synthesize_log(SynthesisSpec.load(args.spec), args.seed)
    path = _out(args, "log.csv")
    write_csv(log, path)
    print(f"wrote {len(log)} traces to {path}")
    return EXIT_OK


def cmd_discover(args) -> int:
    log = load_log(args.log)
    model = discover(log, args.support, args.count_vacuous)
    if not model:
        warnings.warn(f"no constraint reaches support {args.support}; the model is empty", stacklevel=1)
    path = _out(args, "model.decl")
    save_model(model, path)
    print(f"discovered {len(model)} constraints -> {path}")
    return EXIT_OK


def cmd_label(args) -> int:
    labels = label_log(load_log(args.log), parse_constraint(args.constraint))
    path = _out(args, "labels.csv")
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["schema_version", "case_id", "label"])
        for case_id in sorted(labels):
            w.writerow([SCHEMA_VERSION, case_id, labels[case_id]])
    print(f"labeled {len(labels)} cases ({sum(labels.values())} positive) -> {path}")
    return EXIT_OK


def _load_grid(path: str | None) -> tuple[Hyperparams, ...]:
    if path is None:
        return DEFAULT_GRID
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return tuple(Hyperparams(**h) for h in data)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise InputError(f"{path}: invalid hyperparameter grid: {exc}") from exc


def _split(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise InputError(f"invalid split {text!r}") from exc
    if len(parts) != 3:
        raise InputError(f"split needs three ratios, got {text!r}")
    return parts


def cmd_train(args) -> int:
    log = load_log(args.log)
    model = load_model(args.model) if args.model else DeclareModel()
    ratios = _split(args.split)
    data = prepare(log, parse_constraint(args.labeling), model, args.encoding, args.prefix_length, ratios)
    metadata = {"labeling": args.labeling, "prefix_length": args.prefix_length, "split": list(ratios),
                "filter_model": model_to_json(model)}
    forest, results = fit_predictor(data, _load_grid(args.grid), args.seed, metadata)
    path = _out(args, "predictor.json")
    forest.save(path)
    print(f"hyperparameters: {asdict(forest.hyperparams)}")
    if results:
        print(f"validation F1: {max(r.f1 for r in results):.4f}")
    print(f"predictor -> {path}")
    return EXIT_OK


def _ga_config(args) -> GAConfig:
    cfg = GAConfig()
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"{args.config}: cannot read GA config: {exc}") from exc
        cfg = GAConfig.from_dict(data)
    changes = {"seed": args.seed}
    if args.method:
        changes["mode"] = Mode(args.method)
    if args.k:
        changes["k"] = args.k
    return replace(cfg, **changes)


def cmd_explain(args) -> int:
    forest = RandomForestModel.load(args.predictor)
    meta = forest.metadata
    try:
        labeling = parse_constraint(meta["labeling"])
        prefix_length = int(meta["prefix_length"])
        ratios = tuple(meta["split"])
    except KeyError as exc:
        raise InputError(f"{args.predictor}: predictor lacks training metadata {exc}") from exc
    filter_model = model_from_json(meta.get("filter_model", []))
    background = load_model(args.model) if args.model else filter_model
    data = prepare(load_log(args.log), labeling, filter_model, forest.schema.kind, prefix_length, ratios)
    if data.schema != forest.schema:
        raise DataError("the log does not reproduce the predictor's encoding schema")
    if args.query_case is not None:
        matches = [i for i, p in enumerate(data.test) if p.source_case == args.query_case]
        if not matches:
            raise InputError(f"case {args.query_case!r} is not in the test split")
        index = matches[0]
    else:
        index = args.query_index
        if not 0 <= index < len(data.test):
            raise InputError(f"query index {index} outside the test split (size {len(data.test)})")
    cfg = _ga_config(args)
    x = data.test_vectors[index]
    cfs = explain(x, forest, data.train_vectors, background, cfg)
    report = evaluate_set(cfs, background, data.train_vectors, forest.schema, cfg.normalize_distance)
    payload = {"schema_version": SCHEMA_VERSION, "query_index": index,
               "query_case": data.test[index].source_case, "config": cfg.to_dict(),
               "counterfactuals": cfs.to_dict(), "metrics": asdict(report)}
    path = _out(args, "counterfactuals.json")
    _write_json(path, payload)
    print(f"{cfg.mode.value}: {len(cfs.members)}/{cfg.k} counterfactuals (hit rate {cfs.hit:.2f}) -> {path}")
    for name, value in asdict(report).items():
        print(f"  {name}: {'n/a' if value is None else f'{value:.4f}'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    rows = read_rows(args.rows)
    ok = [r for r in rows if r.report is not None]
    if not ok:
        raise DataError(f"{args.rows}: no successful rows to aggregate")
    group_by = tuple(g for g in args.group_by.split(",") if g)
    unknown = [g for g in group_by if g not in ROW_KEYS]
    if unknown:
        raise InputError(f"cannot group by {unknown}; choose from {sorted(ROW_KEYS)}")
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_aggregate(aggregate(ok, group_by), group_by, out_dir / "aggregate.csv")
    write_plot_data(ok, group_by, out_dir / "plot_data.json")
    print(f"aggregated {len(ok)} rows ({len(rows) - len(ok)} failed) -> {out_dir}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = PipelineConfig.load(args.config)
    if args.seeds:
        cfg = replace(cfg, seeds=tuple(int(s) for s in args.seeds.split(",")))
    out = run_bench(cfg, args.output_dir, force=args.force, jobs=args.jobs,
                    progress=lambda msg: print(msg, file=sys.stderr))
    failed = sum(1 for r in out.rows if r.error)
    print(f"{out.new_rows} new rows, {len(out.rows)} total, {failed} failed -> {out.rows_path}")
    return EXIT_OK


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags; SUPPRESS keeps them from resetting values given earlier
    def d(value):
        return argparse.SUPPRESS if suppress else value

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    p.add_argument("--jobs", type=int, default=d(1), help="parallel benchmark workers")
    p.add_argument("--output-dir", default=d("."), help="directory for relative output paths")
    p.add_argument("--force", action="store_true", default=d(False), help="recompute existing benchmark rows")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    parser = argparse.ArgumentParser(prog="declcf", parents=[_global_flags(suppress=False)],
                                     description="Temporal-knowledge-aware counterfactuals for process outcome prediction.")
    parser.add_argument("--version", action="version",
                        version=json.dumps({"declcf": __version__, "schema_version": SCHEMA_VERSION}))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic event log")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("discover", parents=[common], help="mine a Declare model from a log")
    p.add_argument("--log", required=True)
    p.add_argument("--support", type=float, default=0.9)
    p.add_argument("--count-vacuous", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("label", parents=[common], help="label cases by a Declare constraint")
    p.add_argument("--log", required=True)
    p.add_argument("--constraint", required=True, help='e.g. "Existence1[Approve]"')
    p.add_argument("--out")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", parents=[common], help="train the outcome predictor")
    p.add_argument("--log", required=True)
    p.add_argument("--labeling", required=True, help="labeling constraint")
    p.add_argument("--model", help="Declare model used to drop non-conformant traces")
    p.add_argument("--encoding", choices=[k.value for k in EncodingKind], default="SimpleTraceIndex")
    p.add_argument("--prefix-length", type=int, required=True)
    p.add_argument("--split", default="0.7,0.1,0.2")
    p.add_argument("--grid", help="JSON list of hyperparameter objects")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", parents=[common], help="generate counterfactuals for one test prefix")
    p.add_argument("--predictor", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--model", help="background Declare model (default: the training filter model)")
    q = p.add_mutually_exclusive_group()
    q.add_argument("--query-index", type=int, default=0)
    q.add_argument("--query-case")
    p.add_argument("--config", help="GA config JSON")
    p.add_argument("--method", choices=[m.value for m in Mode])
    p.add_argument("--k", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", parents=[common], help="aggregate benchmark rows")
    p.add_argument("--rows", required=True)
    p.add_argument("--group-by", default="method,k")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", parents=[common], help="run a benchmark grid")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", help="comma-separated override of the experiment seeds")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DataError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DeclcfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
