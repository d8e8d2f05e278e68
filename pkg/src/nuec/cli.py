"""Command-line front end.

    nuec run -c experiment.cfg -o results.csv [--format csv|json] [--sample-every N]
    nuec verify -t topk-rmv [--budget N] [--seed S]
    nuec plotdata -i results.samples.csv -o series/

``run`` executes every expanded config in file order and writes one result
row per run; with ``--sample-every`` it also writes per-round series rows to
``<out>.samples.csv``.  Exit status: 0 on success, 1 if any run failed to
quiesce or missed its oracle (or verify found violations), 2 on bad input.

``plotdata`` turns a samples file into one series file per (engine, metric),
averaging the metric over runs at each executed-ops mark.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Optional, Sequence

from .datatypes import DATA_TYPES
from .experiment import ConfigError, load_experiment
from .sim.metrics import CSV_HEADER, SAMPLES_HEADER
from .sim.runner import run_simulation
from .verify import run_verify

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nuec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment file")
    run_p.add_argument("-c", "--config", required=True, help="experiment file path")
    run_p.add_argument("-o", "--out", required=True, help="output file path")
    run_p.add_argument("--format", choices=("csv", "json"), default="csv")
    run_p.add_argument(
        "--sample-every",
        type=int,
        default=0,
        metavar="ROUNDS",
        help="record a series point every N sync rounds (writes <out>.samples.csv)",
    )

    verify_p = sub.add_parser("verify", help="run the property suites for one data type")
    verify_p.add_argument("-t", "--type", required=True, choices=sorted(DATA_TYPES))
    verify_p.add_argument("--budget", type=int, default=5, help="op-count bound per script")
    verify_p.add_argument("--seed", type=int, default=1)

    plot_p = sub.add_parser("plotdata", help="emit plot-ready series from a samples file")
    plot_p.add_argument("-i", "--input", required=True, help="samples csv from run --sample-every")
    plot_p.add_argument("-o", "--outdir", required=True, help="directory for series files")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        configs = load_experiment(args.config)
    except OSError as exc:
        print(f"nuec run: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"nuec run: {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.sample_every < 0:
        print("nuec run: --sample-every must be non-negative", file=sys.stderr)
        return 2
    if args.sample_every:
        configs = [cfg.replaced(sample_every=args.sample_every) for cfg in configs]

    reports = [run_simulation(cfg) for cfg in configs]

    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            if args.format == "csv":
                fh.write(CSV_HEADER + "\n")
                for report in reports:
                    fh.write(report.csv_row() + "\n")
            else:
                json.dump([r.to_dict() for r in reports], fh, indent=2, sort_keys=True)
                fh.write("\n")
        if args.sample_every:
            with open(args.out + ".samples.csv", "w", encoding="utf-8") as fh:
                fh.write(SAMPLES_HEADER + "\n")
                for report in reports:
                    for row in report.sample_rows():
                        fh.write(row + "\n")
    except OSError as exc:
        print(f"nuec run: cannot write output: {exc}", file=sys.stderr)
        return 2

    bad = [r for r in reports if not r.ok()]
    for r in bad:
        print(
            f"nuec run: {r.engine}/{r.data_type} seed {r.seed}: "
            f"quiescent={str(r.quiescent).lower()} oracleMatch={str(r.oracle_match).lower()}",
            file=sys.stderr,
        )
    return 1 if bad else 0


def _cmd_verify(args: argparse.Namespace) -> int:
    seed = args.seed
    env_seed = os.environ.get("NUEC_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            print(f"nuec verify: NUEC_SEED: expected an integer, got {env_seed!r}", file=sys.stderr)
            return 2
    if args.budget < 1:
        print("nuec verify: --budget must be positive", file=sys.stderr)
        return 2
    failures = run_verify(args.type, budget=args.budget, seed=seed)
    return 1 if failures else 0


# samples column -> (series file stem, x column)
_SERIES = {
    "cumulativePayloadBytes": "payload",
    "avgReplicaBytes": "replica_size",
}


def _cmd_plotdata(args: argparse.Namespace) -> int:
    try:
        with open(args.input, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [
                c
                for c in ("engine", "opsExecuted", *_SERIES)
                if c not in header
            ]
            if missing:
                print(
                    f"nuec plotdata: {args.input}: missing column(s) {', '.join(missing)}",
                    file=sys.stderr,
                )
                return 2
            rows = list(reader)
    except OSError as exc:
        print(f"nuec plotdata: cannot read input: {exc}", file=sys.stderr)
        return 2

    if not rows:
        print(f"nuec plotdata: {args.input}: no data rows, nothing to emit", file=sys.stderr)
        return 0

    # (engine, metric, x) -> [y, ...]; averaged so multi-seed sweeps
    # collapse to one curve per engine
    buckets: dict[tuple[str, str], dict[int, list[float]]] = {}
    for line_no, row in enumerate(rows, start=2):
        try:
            x = int(row["opsExecuted"])
            for column in _SERIES:
                buckets.setdefault((row["engine"], column), {}).setdefault(x, []).append(
                    float(row[column])
                )
        except (TypeError, ValueError):
            print(f"nuec plotdata: {args.input}: line {line_no}: malformed row", file=sys.stderr)
            return 2

    os.makedirs(args.outdir, exist_ok=True)
    written = []
    for (engine, column), series in sorted(buckets.items()):
        stem = _SERIES[column]
        path = os.path.join(args.outdir, f"{engine}_{stem}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"opsExecuted,{column}\n")
            for x in sorted(series):
                ys = series[x]
                fh.write(f"{x},{sum(ys) / len(ys):.2f}\n")
        written.append(path)
    print("\n".join(written))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "verify":
        return _cmd_verify(args)
    return _cmd_plotdata(args)


if __name__ == "__main__":
    sys.exit(main())
