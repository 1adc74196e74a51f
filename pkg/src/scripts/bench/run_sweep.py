#!/usr/bin/env python3
"""
Penalty sensitivity sweep.
Runs every policy x tau0 x order cell for one problem and writes the
plot-ready CSV (tau0 against iterations and objective/PSNR) plus a JSON
report.

Usage:
    uv run python -m src.scripts.bench.run_sweep --problem eig --order both
"""

import sys
from pathlib import Path

from src.lib import config
from src.lib.bench import SweepConfig, record_summary, run_cells
from src.lib.records import write_records_csv, write_records_json


def execute(settings: dict) -> int:
    cfg = SweepConfig.from_mapping(settings)
    out_dir = Path(cfg.out) if cfg.out else config.OUTPUT_DIR
    cells = len(cfg.policies) * len(cfg.tau_grid) * len(cfg.orders)

    print(f"Sweeping {cfg.problem} ({cfg.dataset or 'synthetic'}, seed {cfg.seed})...")
    print("=" * 70)
    print(f"Policies: {', '.join(cfg.policies)}")
    print(f"tau0 grid: {len(cfg.tau_grid)} points in [{min(cfg.tau_grid):g}, {max(cfg.tau_grid):g}]")
    print(f"Orders: {', '.join(cfg.orders)}")
    print(f"Cells: {cells} (jobs={cfg.jobs}, cap={cfg.iteration_cap})\n")

    results = run_cells(cfg)
    records = [r.record for r in results]

    for policy in cfg.policies:
        for order in cfg.orders:
            rows = [r for r in records if r.policy == policy and r.order == order]
            converged = [r for r in rows if r.converged]
            marker = "✓" if len(converged) == len(rows) else "⚠"
            line = f"{marker} {policy:<17} {order:<16} {len(converged)}/{len(rows)} converged"
            if converged:
                best = min(converged, key=lambda r: r.iterations)
                line += f", best {best.iterations} iterations at tau0={best.tau0:g}"
            print(line)

    stem = f"sweep_{cfg.problem}"
    csv_path = write_records_csv(out_dir / f"{stem}.csv", records)
    reports = [r.report.to_dict(include_trace=True) for r in results] if cfg.record_trace else None
    json_path = write_records_json(out_dir / f"{stem}.json", records, reports)

    summary = record_summary(records)
    print(f"\n{'=' * 70}")
    print("SUMMARY")
    print(f"{'=' * 70}")
    print(f"Cells run: {summary['cells']}")
    print(f"Converged: {summary['converged']}")
    for status, count in sorted(summary["statuses"].items()):
        print(f"  {status}: {count}")
    print(f"\n✓ Sweep CSV saved to: {csv_path}")
    print(f"✓ Report saved to: {json_path}")
    print("=" * 70)
    return 0


def main():
    from src.scripts.bench.cli import main as cli_main

    return cli_main(["sweep", *sys.argv[1:]])


if __name__ == "__main__":
    sys.exit(main())
