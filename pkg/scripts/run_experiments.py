#!/usr/bin/env python3
"""Run the desk-scale comparison matrix and emit plot-ready series.

Produces, under --outdir:
  results.csv              one row per (engine, data type, setting, seed)
  results.csv.samples.csv  per-round series (when sampling enabled)
  series/                  one averaged curve per (engine, metric)

--quick shrinks the workload about 25x for a fast sanity pass; full scale
matches the defaults baked into SimConfig.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from nuec.cli import main as cli_main
from nuec.sim import CSV_HEADER, SAMPLES_HEADER, SimConfig, run_simulation

ENGINES = ("nuec", "fullop", "stateship")


def matrix(args: argparse.Namespace) -> list[SimConfig]:
    scale = 25 if args.quick else 1
    base = SimConfig(
        n_ops=50000 // scale,
        n_ids=1000 // scale,
        sync_every=100,
        sample_every=args.sample_every,
    )
    configs = []
    for seed in range(1, args.seeds + 1):
        for engine in ENGINES:
            for rr in (0.05, 0.0005):
                configs.append(
                    base.replaced(engine=engine, data_type="topk-rmv", remove_ratio=rr, seed=seed)
                )
            for data_type in ("top-sum", "topk", "histogram"):
                configs.append(base.replaced(engine=engine, data_type=data_type, seed=seed))
        # crash resilience demo: two mid-run failures, nuec only
        configs.append(
            base.replaced(
                engine="nuec",
                data_type="topk-rmv",
                remove_ratio=0.05,
                seed=seed,
                crashes=((1, base.n_ops // 4), (3, base.n_ops // 2)),
            )
        )
    return configs


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--sample-every", type=int, default=5)
    parser.add_argument("--quick", action="store_true", help="25x smaller workload")
    args = parser.parse_args()

    os.makedirs(args.outdir, exist_ok=True)
    out_csv = os.path.join(args.outdir, "results.csv")
    samples_csv = out_csv + ".samples.csv"

    configs = matrix(args)
    failures = 0
    with open(out_csv, "w", encoding="utf-8") as results, open(
        samples_csv, "w", encoding="utf-8"
    ) as samples:
        results.write(CSV_HEADER + "\n")
        samples.write(SAMPLES_HEADER + "\n")
        for i, cfg in enumerate(configs, start=1):
            t0 = time.perf_counter()
            report = run_simulation(cfg)
            elapsed = time.perf_counter() - t0
            results.write(report.csv_row() + "\n")
            for row in report.sample_rows():
                samples.write(row + "\n")
            status = "ok" if report.ok() else "FAILED"
            if not report.ok():
                failures += 1
            print(
                f"[{i}/{len(configs)}] {cfg.engine}/{cfg.data_type} rr={cfg.remove_ratio} "
                f"seed={cfg.seed} {status} ({elapsed:.1f}s)",
                flush=True,
            )

    rc = cli_main(["plotdata", "-i", samples_csv, "-o", os.path.join(args.outdir, "series")])
    if failures:
        print(f"{failures} run(s) failed; see {out_csv}", file=sys.stderr)
        return 1
    return rc


if __name__ == "__main__":
    sys.exit(main())
