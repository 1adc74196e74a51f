"""
Benchmark records: schema, CSV/JSON serialization, text tables, and
export of recovered outputs.

Record schema (version 1), one row per (problem, policy, tau0, order):

    schema_version  int     RECORD_SCHEMA_VERSION
    problem         str     regression | denoise1d | denoise2d | phase | phase_image | eig
    dataset         str     file stem, or "synthetic"
    policy          str     constant | residual_balance | spectral | accelerated
    order           str     smooth_first | nonsmooth_first
    tau0            float   initial penalty
    iterations      int     steps taken (the cap when not converged)
    converged       bool    stopping test satisfied
    status          str     converged | max_iter | diverged | solver_error
    wall_ms         float   wall-clock time of the solve
    objective       float   objective at the final iterate
    psnr            float?  PSNR of the recovered signal/image, when defined
    seed            int     dataset seed
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from src.lib import config
from src.lib.errors import DatasetIOError, ValidationError
from src.lib.imageio import write_csv_vector, write_pgm


@dataclass(frozen=True)
class BenchRecord:
    problem: str
    dataset: str
    policy: str
    order: str
    tau0: float
    iterations: int
    converged: bool
    status: str
    wall_ms: float
    objective: float
    psnr: Optional[float]
    seed: int
    schema_version: int = config.RECORD_SCHEMA_VERSION

    def sort_key(self):
        return (self.problem, self.policy, self.tau0, self.order)

    @property
    def iterations_label(self) -> str:
        """Iteration count with a trailing + when the run did not converge."""
        return f"{self.iterations}" if self.converged else f"{self.iterations}+"

    def to_dict(self) -> dict:
        return {name: _encode(value) for name, value in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "BenchRecord":
        """Parse a record, rejecting unknown or missing fields."""
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"unknown record fields: {sorted(unknown)}")
        missing = names - set(data) - {"schema_version"}
        if missing:
            raise ValidationError(f"missing record fields: {sorted(missing)}")
        version = data.get("schema_version", config.RECORD_SCHEMA_VERSION)
        try:
            version = int(version)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad record schema version {version!r}") from exc
        if version != config.RECORD_SCHEMA_VERSION:
            raise ValidationError(f"unsupported record schema version {version}")
        psnr = data["psnr"]
        return cls(
            problem=str(data["problem"]),
            dataset=str(data["dataset"]),
            policy=str(data["policy"]),
            order=str(data["order"]),
            tau0=float(data["tau0"]),
            iterations=int(data["iterations"]),
            converged=_parse_bool(data["converged"]),
            status=str(data["status"]),
            wall_ms=float(data["wall_ms"]),
            objective=float(data["objective"]),
            psnr=None if psnr in (None, "") else float(psnr),
            seed=int(data["seed"]),
            schema_version=int(version),
        )


CSV_COLUMNS = [f.name for f in fields(BenchRecord)]


def _encode(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if str(value) in ("True", "true", "1"):
        return True
    if str(value) in ("False", "false", "0"):
        return False
    raise ValidationError(f"not a boolean: {value!r}")


# =============================================================================
# CSV / JSON
# =============================================================================


def write_records_csv(path: Path, records: Sequence[BenchRecord], exclude: Sequence[str] = ()) -> Path:
    """Write records in the given order; floats use repr so reruns are byte-identical."""
    path = Path(path)
    columns = [c for c in CSV_COLUMNS if c not in exclude]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for record in records:
                row = record.to_dict()
                writer.writerow(["" if row[c] is None else _cell(row[c]) for c in columns])
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc
    return path


def _cell(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def read_records_csv(path: Path) -> List[BenchRecord]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            return [BenchRecord.from_dict(row) for row in csv.DictReader(f)]
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc


def write_records_json(path: Path, records: Sequence[BenchRecord], reports: Optional[list] = None) -> Path:
    path = Path(path)
    payload = {
        "schema_version": config.RECORD_SCHEMA_VERSION,
        "records": [r.to_dict() for r in records],
    }
    if reports is not None:
        payload["reports"] = reports
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, ensure_ascii=False)
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc
    return path


def read_records_json(path: Path) -> List[BenchRecord]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc
    return [BenchRecord.from_dict(r) for r in payload.get("records", [])]


# =============================================================================
# Text table
# =============================================================================


def format_table(records: Sequence[BenchRecord], policies: Sequence[str]) -> str:
    """
    Aligned comparison table: one row per (problem, dataset, order), one
    column per policy holding "iterations(seconds) objective[/PSNR]".
    """
    rows = {}
    for r in records:
        rows.setdefault((r.problem, r.dataset, r.order), {})[r.policy] = r

    header = ["problem", "dataset", "order", *policies]
    lines = [header]
    for (problem, dataset, order), by_policy in rows.items():
        cells = [problem, dataset, order]
        for policy in policies:
            r = by_policy.get(policy)
            if r is None:
                cells.append("-")
                continue
            quality = f"{r.objective:.4g}" if r.psnr is None else f"{r.psnr:.1f}dB"
            cells.append(f"{r.iterations_label}({r.wall_ms / 1000:.3f}) {quality}")
        lines.append(cells)

    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    text = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in lines]
    text.insert(1, "-" * len(text[0]))
    return "\n".join(text)


# =============================================================================
# Recovered outputs
# =============================================================================


def export_outputs(
    report, output: np.ndarray, out_dir: Path, stem: str, include_trace: bool = True
) -> List[Path]:
    """
    Write the recovered output (CSV for vectors, PGM for images) and the
    JSON solve report next to it. Returns the written paths.
    """
    out_dir = Path(out_dir)
    output = np.asarray(output)
    if output.ndim == 2:
        data_path = write_pgm(out_dir / f"{stem}.pgm", output)
    else:
        data_path = write_csv_vector(out_dir / f"{stem}.csv", output)

    report_path = out_dir / f"{stem}.json"
    try:
        with open(report_path, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(include_trace=include_trace), f, indent=2)
    except OSError as exc:
        raise DatasetIOError(f"cannot write {report_path}: {exc}") from exc
    return [data_path, report_path]
