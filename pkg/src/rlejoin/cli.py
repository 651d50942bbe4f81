"""Command-line interface: join, bench, and stats subcommands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import RleJoinError
from .runner import MODES, run_bench, run_join, run_stats


def _write_machine_report(report, path) -> None:
    Path(path).write_text("\n".join(report.machine_lines()) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rlejoin",
        description=(
            "Compute run-length-encoded summaries of n-way equi-joins from "
            "normalized CSV tables, without materializing the join."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    join = sub.add_parser("join", help="run the summarization pipeline")
    join.add_argument("query", help="query file (table/project/root directives)")
    join.add_argument("--mode", choices=MODES, default="summarize")
    join.add_argument("--out", help="output directory for store/materialize modes")
    join.add_argument("--coalesce", action="store_true",
                      help="merge adjacent equal-valued runs before output")
    join.add_argument("--cache", help="factor cache directory")
    join.add_argument("--no-header", action="store_true",
                      help="input CSVs have no header row (columns are col0..colN)")
    join.add_argument("--report", help="write a machine-readable key: value report")

    bench = sub.add_parser("bench", help="compare pipeline phases with baselines")
    bench.add_argument("query", nargs="?", help="query file")
    bench.add_argument("--baselines", default="brute,hash",
                       help="comma-separated subset of brute,hash (empty for none)")
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--no-header", action="store_true")
    bench.add_argument("--synthetic", choices=("redundancy", "empty"),
                       help="generate and bench a built-in fixture instead")
    bench.add_argument("--seed", type=int, default=0,
                       help="seed for synthetic fixture generation")
    bench.add_argument("--workdir", help="directory for synthetic fixture files")
    bench.add_argument("--report", help="write a machine-readable key: value report")

    stats = sub.add_parser("stats", help="planning-only report (no join executed)")
    stats.add_argument("query")
    stats.add_argument("--no-header", action="store_true")
    stats.add_argument("--report", help="write a machine-readable key: value report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "join":
            report = run_join(
                args.query,
                mode=args.mode,
                out_dir=args.out,
                header=not args.no_header,
                cache_dir=args.cache,
                coalesce_summary=args.coalesce,
            )
        elif args.command == "bench":
            requested = tuple(b for b in args.baselines.split(",") if b)
            for b in requested:
                if b not in ("brute", "hash"):
                    parser.error(f"unknown baseline {b!r}")
            report = run_bench(
                query_path=args.query,
                baselines_requested=requested,
                repeats=args.repeats,
                header=not args.no_header,
                synthetic=args.synthetic,
                seed=args.seed,
                workdir=args.workdir,
            )
        else:
            report = run_stats(args.query, header=not args.no_header)
    except RleJoinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3

    print(report.text())
    if getattr(args, "report", None):
        _write_machine_report(report, args.report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
