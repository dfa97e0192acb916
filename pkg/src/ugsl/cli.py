"""Command-line entry point.

Subcommands: train, line-search, random-search, stats, report. Exit codes:
0 success, 2 configuration error, 3 data error, 4 numeric/resource failure.
The environment variable UGSL_SEED supplies the seed when --seed is absent.

Every run writes a reproducibility header (tool version, seed, config
hash). Timestamps appear only in JSONL header lines, so rerunning a
command over the same inputs reproduces every other output byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import GslConfig
from .data import load_dataset, read_edge_tsv, write_edge_tsv
from .errors import (ConfigurationError, IngestionError, NumericError,
                     ResourceError)
from .search import (SearchSpace, best_architecture_aggregate,
                     component_best_average, default_search_space,
                     line_search, load_results_jsonl, random_search,
                     top_fraction_analysis)
from .stats import STAT_FIELDS, compute_stats, correlate_results
from .training import base_config, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _resolve_seed(flag_value: int | None, fallback: int = 0) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("UGSL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as err:
            raise ConfigurationError(f"UGSL_SEED: not an integer ({env!r})") from err
    return fallback


def _args_hash(parts: dict) -> str:
    blob = json.dumps(parts, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _header_line(seed: int, config_hash: str) -> str:
    record = {
        "kind": "header",
        "version": __version__,
        "seed": seed,
        "config_hash": config_hash,
        "generated": datetime.now(timezone.utc).isoformat(),
    }
    return json.dumps(record, sort_keys=True)


def _csv_header(seed: int, config_hash: str) -> str:
    return f"# ugsl {__version__} seed={seed} hash={config_hash}"


def _write_csv(path: Path, seed: int, config_hash: str, columns: list,
               rows: list) -> None:
    lines = [_csv_header(seed, config_hash), ",".join(columns)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    seed = _resolve_seed(args.seed, fallback=0)
    if args.base:
        config = base_config(dataset, seed=seed)
    else:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as err:
            raise IngestionError(f"config file: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"config file: invalid JSON ({err})") from err
        config = GslConfig.from_dict(raw)
        if args.seed is not None or os.environ.get("UGSL_SEED") is not None:
            config.seed = seed
    config.validate(n_nodes=dataset.n)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = train(dataset, config, capture_adjacency=True)
    with open(out / "result.jsonl", "w") as fh:
        fh.write(_header_line(config.seed, config.config_hash()) + "\n")
        fh.write(json.dumps(result.to_dict(), sort_keys=True) + "\n")
    if result.status != "ok":
        print(f"trial failed: {result.error}", file=sys.stderr)
        return EXIT_NUMERIC
    write_edge_tsv(result.learned_adjacency, out / "learned_adjacency.tsv")
    print(f"val {result.best_val_accuracy:.4f} "
          f"test {result.test_accuracy_at_best_val:.4f} "
          f"epochs {result.epochs_run} -> {out}")
    return EXIT_OK


def _parse_options(component: str, raw: str) -> list:
    options = [opt.strip() for opt in raw.split(",") if opt.strip()]
    if not options:
        raise ConfigurationError("line-search: empty --options")
    if component in ("regularizers", "unsupervised"):
        return [tuple(p for p in opt.split("+") if p != "none")
                for opt in options]
    return options


def cmd_line_search(args) -> int:
    dataset = load_dataset(args.data)
    seed = _resolve_seed(args.seed)
    base = base_config(dataset, seed=seed, max_epochs=args.max_epochs,
                       patience=args.patience)
    options = _parse_options(args.component, args.options)
    space = default_search_space(max_epochs=args.max_epochs,
                                 patience=args.patience)
    table = line_search(dataset, base, args.component, options,
                        trials_per_option=args.trials_per_option,
                        master_seed=seed, space=space)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_hash = _args_hash({"component": args.component, "options": args.options,
                           "trials": args.trials_per_option, "seed": seed})
    with open(out / "line_search.jsonl", "w") as fh:
        fh.write(_header_line(seed, run_hash) + "\n")
        for trial in table.trials:
            fh.write(json.dumps(trial.to_dict(), sort_keys=True) + "\n")
    rows = [(raw_opt, f"{t.best_val_accuracy:.6f}",
             f"{t.test_accuracy_at_best_val:.6f}", t.status)
            for raw_opt, t in zip(args.options.split(","), table.trials)]
    _write_csv(out / "line_search.csv", seed, run_hash,
               ["option", "val_accuracy", "test_accuracy", "status"], rows)
    print(f"{len(table.trials)} options -> {out}")
    return EXIT_OK


def _load_space(args) -> SearchSpace:
    if args.space is None:
        return default_search_space()
    try:
        raw = json.loads(Path(args.space).read_text())
    except OSError as err:
        raise IngestionError(f"space file: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"space file: invalid JSON ({err})") from err
    fields = {f.name for f in dataclasses.fields(SearchSpace)}
    unknown = set(raw) - fields
    if unknown:
        raise ConfigurationError(f"space file: unknown fields {sorted(unknown)}")

    def tupled(value):
        if isinstance(value, list):
            return tuple(tupled(v) for v in value)
        return value

    return default_search_space(**{k: tupled(v) for k, v in raw.items()})


def cmd_random_search(args) -> int:
    dataset = load_dataset(args.data)
    seed = _resolve_seed(args.seed)
    space = _load_space(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.jsonl"
    run_hash = _args_hash({"trials": args.trials, "seed": seed,
                           "space": dataclasses.asdict(space)})

    completed = []
    if results_path.exists():
        completed = [t.trial_id for t in load_results_jsonl(results_path).trials]
    else:
        with open(results_path, "w") as fh:
            fh.write(_header_line(seed, run_hash) + "\n")
    random_search(dataset, space, n_trials=args.trials,
                  concurrency=args.jobs, master_seed=seed,
                  jsonl_path=results_path, completed_ids=completed)

    table = load_results_jsonl(results_path)
    report = top_fraction_analysis(table, fraction=0.05)
    rows = []
    for component, values in report["components"].items():
        for value, cell in values.items():
            rows.append((component, value, cell["count"], cell["min"],
                         cell["q1"], cell["median"], cell["q3"], cell["max"]))
    _write_csv(out / "top5pct.csv", seed, run_hash,
               ["component", "value", "count", "min", "q1", "median", "q3",
                "max"], rows)
    best = table.best_by_val()
    if best is not None:
        payload = {"trial_id": best.trial_id,
                   "best_val_accuracy": best.best_val_accuracy,
                   "test_accuracy_at_best_val": best.test_accuracy_at_best_val,
                   "config": best.config.to_dict()}
        (out / "best_config.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")
    ok = len(table.ok_trials())
    print(f"{len(table.trials)} trials ({ok} ok) -> {out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    adjacency = read_edge_tsv(args.graph, n=args.n)
    record = compute_stats(adjacency)
    seed = _resolve_seed(args.seed)
    run_hash = _args_hash({"graph": str(args.graph), "n": args.n})
    stats_dict = record.to_dict()
    columns = list(STAT_FIELDS) + ["degenerate"]
    _write_csv(Path(args.out), seed, run_hash, columns,
               [[stats_dict[c] for c in columns]])
    print(f"stats -> {args.out}" + (" (degenerate)" if record.degenerate else ""))
    return EXIT_OK


def cmd_report(args) -> int:
    tables = {}
    for path in args.results:
        table = load_results_jsonl(path)
        key = table.dataset if table.dataset != "dataset" else Path(path).stem
        if key in tables:
            key = f"{key}:{Path(path).stem}"
        tables[key] = table
    if not tables:
        raise ConfigurationError("report: no results files given")
    seed = _resolve_seed(args.seed)
    run_hash = _args_hash({"mode": args.mode,
                           "results": [str(p) for p in args.results]})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.mode == "top5":
        if len(tables) != 1:
            raise ConfigurationError("report top5 expects exactly one results file")
        report = top_fraction_analysis(next(iter(tables.values())),
                                       fraction=0.05)
        rows = [(component, value, cell["count"], cell["min"], cell["q1"],
                 cell["median"], cell["q3"], cell["max"])
                for component, values in report["components"].items()
                for value, cell in values.items()]
        _write_csv(out / "top5pct.csv", seed, run_hash,
                   ["component", "value", "count", "min", "q1", "median",
                    "q3", "max"], rows)
        (out / "top5pct.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n")
    elif args.mode == "best-arch":
        rows = best_architecture_aggregate(tables)
        csv_rows = [(i + 1, f"{r['mean_test_accuracy']:.6f}", *r["architecture"])
                    for i, r in enumerate(rows)]
        _write_csv(out / "best_architectures.csv", seed, run_hash,
                   ["rank", "mean_test_accuracy", "positional", "scorer",
                    "sparsifier", "processor", "encoder", "regularizers",
                    "unsupervised", "adjacency_mode"], csv_rows)
    elif args.mode == "component-avg":
        report = component_best_average(tables)
        rows = [(component, value, f"{acc:.6f}")
                for component, values in report.items()
                for value, acc in values.items()]
        _write_csv(out / "component_averages.csv", seed, run_hash,
                   ["component", "value", "mean_best_test_accuracy"], rows)
    elif args.mode == "correlation":
        merged = []
        for table in tables.values():
            merged.extend(table.trials)
        report = correlate_results(merged)
        rows = [(r["stat"], f"{r['rho']:.6f}", r["degenerate"]) for r in report]
        _write_csv(out / "correlations.csv", seed, run_hash,
                   ["stat", "rho", "degenerate"], rows)
    else:
        raise ConfigurationError(f"report: unknown mode {args.mode!r}")
    print(f"{args.mode} report -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ugsl",
        description="Graph structure learning: train, search, and analyze.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one configuration")
    p_train.add_argument("--data", required=True, help="dataset manifest JSON")
    group = p_train.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="GslConfig JSON file")
    group.add_argument("--base", action="store_true",
                       help="use the reference base model")
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.set_defaults(func=cmd_train)

    p_line = sub.add_parser("line-search",
                            help="vary one component against the base model")
    p_line.add_argument("--data", required=True)
    p_line.add_argument("--component", required=True)
    p_line.add_argument("--options", required=True,
                        help="comma-separated option list")
    p_line.add_argument("--trials-per-option", type=int, default=3)
    p_line.add_argument("--max-epochs", type=int, default=200)
    p_line.add_argument("--patience", type=int, default=30)
    p_line.add_argument("--out", required=True)
    p_line.add_argument("--seed", type=int, default=None)
    p_line.set_defaults(func=cmd_line_search)

    p_rand = sub.add_parser("random-search",
                            help="random search over all components")
    p_rand.add_argument("--data", required=True)
    p_rand.add_argument("--space", default=None,
                        help="SearchSpace overrides JSON (default space if absent)")
    p_rand.add_argument("--trials", type=int, default=100)
    p_rand.add_argument("--jobs", type=int, default=1)
    p_rand.add_argument("--out", required=True)
    p_rand.add_argument("--seed", type=int, default=None)
    p_rand.set_defaults(func=cmd_random_search)

    p_stats = sub.add_parser("stats", help="statistics of a learned graph")
    p_stats.add_argument("--graph", required=True, help="edge-list TSV")
    p_stats.add_argument("--n", type=int, required=True, help="node count")
    p_stats.add_argument("--out", required=True, help="output CSV path")
    p_stats.add_argument("--seed", type=int, default=None)
    p_stats.set_defaults(func=cmd_stats)

    p_rep = sub.add_parser("report", help="reports over results JSONL files")
    p_rep.add_argument("--results", nargs="+", required=True)
    p_rep.add_argument("--mode", required=True,
                       choices=["top5", "best-arch", "component-avg",
                                "correlation"])
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--seed", type=int, default=None)
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigurationError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, ResourceError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
