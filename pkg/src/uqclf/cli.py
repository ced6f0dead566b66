"""Command-line interface.

Verbs:
  run <config.json>        execute one experiment
  grid <dir-of-configs>    execute every *.json config in a directory
  synth                    emit a synthetic blob feature table
  report-merge <csv...>    merge report CSVs, re-sorted by UAcc

Exit codes: 0 success, 1 config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data import ClassVocabulary, default_vocabulary, save_feature_table, synth_blobs
from .metrics import (
    REPORT_COLUMNS,
    merge_report_rows,
    read_report_csv,
)
from .runner import ConfigError, ExperimentConfig, run_experiment, run_grid


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    outcome = run_experiment(cfg)
    r = outcome.report
    print(
        f"{cfg.name}: acc={r.acc:.4f} uacc={r.uacc:.4f} "
        f"threshold={outcome.threshold:.4g} -> {outcome.output_dir}"
    )
    return 0


def _cmd_grid(args) -> int:
    config_dir = Path(args.configs)
    paths = sorted(config_dir.glob("*.json"))
    if not paths:
        raise ConfigError(f"no *.json configs in {config_dir}")
    configs = [ExperimentConfig.from_json_file(p) for p in paths]
    outcome = run_grid(configs)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    from .metrics import render_report_markdown, write_report_csv

    write_report_csv(outcome.rows, out_dir / "report.csv")
    (out_dir / "report.md").write_text(
        render_report_markdown(outcome.rows), encoding="utf-8"
    )
    import json

    (out_dir / "failures.json").write_text(
        json.dumps(
            [{"experiment": name, "error": msg} for name, msg in outcome.failures],
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    for name, msg in outcome.failures:
        print(f"FAILED {name}: {msg}", file=sys.stderr)
    print(f"{len(outcome.rows)} row(s), {len(outcome.failures)} failure(s) -> {out_dir}")
    return 0 if outcome.rows else 2


def _cmd_synth(args) -> int:
    if args.classes:
        vocab = ClassVocabulary(tuple(args.classes.split(",")))
    else:
        vocab = default_vocabulary()
    table = synth_blobs(
        n_per_class=args.n_per_class,
        d=args.dim,
        vocab=vocab,
        spread=args.spread,
        separation=args.separation,
        seed=args.seed,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_feature_table(table, vocab, out)
    print(f"{table.n} rows x {table.d} features -> {out}")
    return 0


def _cmd_report_merge(args) -> int:
    merged = merge_report_rows([read_report_csv(p) for p in args.csvs])
    lines = [",".join(REPORT_COLUMNS)] + [",".join(row) for row in merged]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{len(merged)} row(s) -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uqclf",
        description="Uncertainty-aware classification pipeline",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.set_defaults(func=_cmd_run)

    p_grid = sub.add_parser("grid", help="run every *.json config in a directory")
    p_grid.add_argument("configs", help="directory of JSON configs")
    p_grid.add_argument("--out", default="grid-report", help="combined report directory")
    p_grid.set_defaults(func=_cmd_grid)

    p_synth = sub.add_parser("synth", help="emit a synthetic blob feature table")
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.add_argument("--n-per-class", type=int, default=100)
    p_synth.add_argument("--dim", type=int, default=16)
    p_synth.add_argument("--spread", type=float, default=1.0)
    p_synth.add_argument("--separation", type=float, default=8.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument(
        "--classes", default="", help="comma-separated class names (default: 7 lesion classes)"
    )
    p_synth.set_defaults(func=_cmd_synth)

    p_merge = sub.add_parser("report-merge", help="merge report CSVs sorted by UAcc")
    p_merge.add_argument("csvs", nargs="+", help="report CSV files")
    p_merge.add_argument("--out", default="", help="write merged CSV here (default: stdout)")
    p_merge.set_defaults(func=_cmd_report_merge)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
