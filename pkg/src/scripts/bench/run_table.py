#!/usr/bin/env python3
"""
Policy comparison table.
Runs the comparison policies (constant, residual balance, spectral by
default) at one shared tau0 on each requested problem and writes the
table as CSV and aligned text.

Usage:
    uv run python -m src.scripts.bench.run_table --problem regression,denoise1d,eig
"""

import sys
from pathlib import Path

from src.lib import config
from src.lib.bench import TableConfig, record_summary, run_table
from src.lib.errors import DatasetIOError
from src.lib.records import format_table, write_records_csv


def execute(settings: dict) -> int:
    cfg = TableConfig.from_mapping(settings)
    out_dir = Path(cfg.out) if cfg.out else config.OUTPUT_DIR

    print("Running policy comparison...")
    print("=" * 70)
    print(f"Problems: {', '.join(cfg.problems)}")
    print(f"Policies: {', '.join(cfg.policies)}")
    print(f"Shared tau0: {cfg.tau0:g}\n")

    records = run_table(cfg)
    table = format_table(records, cfg.policies)
    print(table)

    csv_path = write_records_csv(out_dir / "table.csv", records)
    txt_path = out_dir / "table.txt"
    try:
        txt_path.write_text(table + "\n", encoding="utf-8")
    except OSError as exc:
        raise DatasetIOError(f"cannot write {txt_path}: {exc}") from exc

    summary = record_summary(records)
    print(f"\n{'=' * 70}")
    print("SUMMARY")
    print(f"{'=' * 70}")
    print(f"Cells run: {summary['cells']} ({len(cfg.problems)} problems x {len(cfg.policies)} policies)")
    print(f"Converged: {summary['converged']}")
    if summary["converged"] < summary["cells"]:
        print("⚠ Entries marked n+ hit the iteration cap or stopped early")
    print(f"\n✓ Table CSV saved to: {csv_path}")
    print(f"✓ Table text saved to: {txt_path}")
    print("=" * 70)
    return 0


def main():
    from src.scripts.bench.cli import main as cli_main

    return cli_main(["table", *sys.argv[1:]])


if __name__ == "__main__":
    sys.exit(main())
