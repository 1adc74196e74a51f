#!/usr/bin/env python3
"""Unit tests for bench.py, records.py and the admm-bench command line"""

import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.lib import config  # noqa: E402
from src.lib.bench import (  # noqa: E402
    SweepConfig,
    TableConfig,
    build_case,
    record_summary,
    resolve_dataset,
    run_cell,
    run_cells,
    run_sweep,
    run_table,
)
from src.lib.errors import DatasetIOError, ValidationError  # noqa: E402
from src.lib.imageio import read_csv_matrix, read_image_gray, write_pgm  # noqa: E402
from src.lib.records import (  # noqa: E402
    BenchRecord,
    export_outputs,
    format_table,
    read_records_csv,
    read_records_json,
    write_records_csv,
    write_records_json,
)
from src.scripts.bench.cli import main, parse_tau_grid  # noqa: E402


def eig_sweep(**overrides):
    values = dict(
        problem="eig",
        tau_grid=(250.0, 500.0),
        policies=("constant", "spectral"),
        order="both",
        max_iter=50,
    )
    values.update(overrides)
    return SweepConfig(**values)


def record(**overrides):
    values = dict(
        problem="regression",
        dataset="synthetic",
        policy="spectral",
        order="smooth_first",
        tau0=1.0,
        iterations=42,
        converged=True,
        status="converged",
        wall_ms=20.0,
        objective=3.25,
        psnr=None,
        seed=0,
    )
    values.update(overrides)
    return BenchRecord(**values)


# =============================================================================
# Tests for SweepConfig and TableConfig
# =============================================================================


class TestSweepConfig:
    """Tests for sweep configuration validation."""

    def test_defaults(self):
        cfg = SweepConfig(problem="regression")
        assert cfg.orders == ("smooth_first",)
        assert cfg.iteration_cap == config.MAX_ITER_DEFAULTS["regression"]
        assert len(cfg.tau_grid) == 25

    def test_both_orders(self):
        assert eig_sweep().orders == ("smooth_first", "nonsmooth_first")

    def test_empty_policy_list_rejected(self):
        with pytest.raises(ValidationError, match="policy list is empty"):
            SweepConfig(problem="eig", policies=())

    def test_empty_grid_rejected(self):
        with pytest.raises(ValidationError):
            SweepConfig(problem="eig", tau_grid=())

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf])
    def test_nonpositive_or_infinite_tau_rejected(self, bad):
        with pytest.raises(ValidationError):
            SweepConfig(problem="eig", tau_grid=(1.0, bad))

    def test_unknown_problem_rejected(self):
        with pytest.raises(ValidationError):
            SweepConfig(problem="lasso")

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValidationError):
            SweepConfig(problem="eig", policies=("constant", "magic"))

    def test_from_mapping_converts_lists(self):
        cfg = SweepConfig.from_mapping({"problem": "eig", "tau_grid": [1, 2], "policies": ["spectral"]})
        assert cfg.tau_grid == (1, 2)
        assert cfg.policies == ("spectral",)

    def test_from_mapping_rejects_unknown_key(self):
        with pytest.raises(ValidationError):
            SweepConfig.from_mapping({"problem": "eig", "gamma": 3})


class TestTableConfig:
    def test_dataset_needs_single_problem(self):
        with pytest.raises(ValidationError):
            TableConfig(problems=("regression", "eig"), dataset="data.csv")

    def test_empty_problem_list_rejected(self):
        with pytest.raises(ValidationError):
            TableConfig(problems=())

    def test_sweep_for_uses_shared_tau0(self):
        sweep = TableConfig(problems=("eig",), tau0=3.0).sweep_for("eig")
        assert sweep.tau_grid == (3.0,)
        assert sweep.problem == "eig"


# =============================================================================
# Tests for build_case()
# =============================================================================


class TestBuildCase:
    """Tests for synthetic and file-backed benchmark cases."""

    def test_synthetic_regression(self):
        case = build_case("regression")
        assert case.dataset == "synthetic"
        assert case.instance.constraint.A.in_dim == 40
        assert case.reference is None
        np.testing.assert_array_equal(case.truth[:15], 3.0)
        np.testing.assert_array_equal(case.truth[15:], 0.0)

    def test_regression_csv_last_column_is_target(self, tmp_path):
        path = tmp_path / "housing.csv"
        path.write_text("a,b,y\n1,0,2\n0,1,3\n1,1,5\n")
        case = build_case("regression", str(path))
        assert case.dataset == "housing"
        assert case.instance.constraint.A.in_dim == 2
        assert case.truth is None

    def test_signal_csv(self, tmp_path):
        path = tmp_path / "signal.csv"
        path.write_text("\n".join(str(x) for x in np.repeat([1.0, 4.0, 2.0], 10)) + "\n")
        case = build_case("denoise1d", str(path))
        assert case.instance.name == "denoise1d"
        assert case.reference.shape == (30,)
        assert case.peak == 4.0

    def test_signal_csv_with_two_columns_rejected(self, tmp_path):
        path = tmp_path / "signal.csv"
        path.write_text("1,2\n3,4\n")
        with pytest.raises(DatasetIOError):
            build_case("denoise1d", str(path))

    def test_image_dataset(self, tmp_path):
        img = np.random.default_rng(0).integers(0, 256, size=(8, 6)).astype(float)
        path = write_pgm(tmp_path / "tile.pgm", img)
        case = build_case("denoise2d", str(path), sigma=10.0)
        assert case.instance.name == "denoise2d"
        np.testing.assert_array_equal(case.reference, img)
        assert case.peak == 255.0

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(DatasetIOError):
            build_case("denoise2d", str(tmp_path / "missing.pgm"))

    def test_relative_dataset_found_under_data_dir(self, tmp_path, monkeypatch):
        (tmp_path / "signal.csv").write_text("1\n2\n2\n1\n")
        monkeypatch.setattr(config, "DATA_DIR", tmp_path)
        monkeypatch.chdir(tmp_path.parent)
        assert resolve_dataset("signal.csv") == tmp_path / "signal.csv"
        assert build_case("denoise1d", "signal.csv").dataset == "signal"

    def test_phase_is_synthetic_only(self, tmp_path):
        path = tmp_path / "phase.csv"
        path.write_text("1,2\n")
        with pytest.raises(ValidationError):
            build_case("phase", str(path))

    def test_eig_truth_is_unit_vector(self):
        case = build_case("eig", seed=2)
        assert np.linalg.norm(case.truth) == pytest.approx(1.0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            build_case("lasso")


class TestTruthError:
    """Tests for BenchCase.truth_error()."""

    def test_regression_against_x_star(self):
        case = build_case("regression")
        report = run_cell(case, "constant", 1.0, "smooth_first", 1e-3, 2).report
        assert case.truth_error(replace(report, final_v=case.truth.copy())) == 0.0
        doubled = replace(report, final_v=2.0 * case.truth)
        assert case.truth_error(doubled) == pytest.approx(1.0)

    def test_phase_ignores_global_phase(self):
        case = build_case("phase", seed=1)
        report = run_cell(case, "constant", 1.0, "smooth_first", 1e-3, 2).report
        rotated = replace(report, final_v=np.exp(0.7j) * case.truth)
        assert case.truth_error(rotated) == pytest.approx(0.0, abs=1e-12)

    def test_denoise_has_no_truth_error(self):
        case = build_case("denoise1d")
        report = run_cell(case, "constant", 1.0, "smooth_first", 1e-3, 2).report
        assert case.truth_error(report) is None


# =============================================================================
# Tests for run_cell(), run_sweep() and run_table()
# =============================================================================


class TestRunSweep:
    """Tests for sweep cells on the eigenvector problem."""

    def test_cell_count_and_order(self):
        records = run_sweep(eig_sweep())
        assert len(records) == 8
        assert records == sorted(records, key=lambda r: r.sort_key())
        assert {r.order for r in records} == {"smooth_first", "nonsmooth_first"}

    def test_unconverged_cells_report_cap(self):
        for r in run_sweep(eig_sweep(max_iter=3, eps_tol=0.0)):
            assert not r.converged
            assert r.iterations == 3
            assert r.iterations_label == "3+"

    def test_threads_match_serial(self):
        serial = run_sweep(eig_sweep())
        threaded = run_sweep(eig_sweep(jobs=4))
        assert [replace(r, wall_ms=0.0) for r in serial] == [replace(r, wall_ms=0.0) for r in threaded]

    def test_constant_policy_trace_keeps_tau0(self):
        case = build_case("eig")
        result = run_cell(case, "constant", 250.0, "smooth_first", 1e-3, 20, record_trace=True)
        assert len(result.report.trace) == result.report.iterations
        assert all(row.tau == 250.0 for row in result.report.trace)

    def test_shared_case_is_reused(self):
        case = build_case("eig", seed=4)
        results = run_cells(eig_sweep(seed=4, policies=("constant",)), case)
        assert len(results) == 4
        assert all(r.record.seed == 4 for r in results)

    def test_missing_dataset_names_cell(self, tmp_path):
        cfg = SweepConfig(problem="denoise2d", dataset=str(tmp_path / "gone.pgm"))
        with pytest.raises(DatasetIOError, match="denoise2d/gone"):
            run_cells(cfg)

    def test_deterministic_csv(self, tmp_path):
        """Two runs give byte-identical CSV once timings are dropped."""
        first = write_records_csv(tmp_path / "a.csv", run_sweep(eig_sweep()), exclude=("wall_ms",))
        second = write_records_csv(tmp_path / "b.csv", run_sweep(eig_sweep()), exclude=("wall_ms",))
        assert first.read_bytes() == second.read_bytes()
        assert "wall_ms" not in first.read_text().splitlines()[0]

    def test_record_summary(self):
        records = [record(), record(converged=False, status="max_iter")]
        assert record_summary(records) == {
            "cells": 2,
            "converged": 1,
            "statuses": {"converged": 1, "max_iter": 1},
        }


def _iteration_spread(records) -> float:
    counts = [r.iterations for r in records]
    return max(counts) / min(counts)


@pytest.mark.slow
class TestSweepShape:
    """Directional checks on full tau0 sweeps. Measured deviations are listed in DESIGN.md."""

    def test_regression_policies_reach_same_minimum(self):
        """Spectral from tau0 = 0.1 and vanilla at tau0 = 1 converge to the same objective."""
        case = build_case("regression")
        spectral = run_cell(case, "spectral", 0.1, "smooth_first", 1e-3, 2000).record
        vanilla = run_cell(case, "constant", 1.0, "smooth_first", 1e-3, 2000).record
        assert spectral.converged and vanilla.converged
        assert spectral.objective == pytest.approx(vanilla.objective, rel=1e-2)

    @pytest.mark.xfail(strict=True, reason="vanilla at tau0 = 1 converges on this dataset (DESIGN.md)")
    def test_regression_vanilla_hits_cap(self):
        case = build_case("regression")
        assert not run_cell(case, "constant", 1.0, "smooth_first", 1e-3, 2000).record.converged

    @pytest.mark.xfail(strict=True, reason="spectral iteration counts spread about 27x (DESIGN.md)")
    def test_regression_spectral_flat_over_grid(self):
        records = run_sweep(SweepConfig(problem="regression", policies=("spectral",)))
        assert _iteration_spread(records) <= 10.0

    @pytest.mark.xfail(reason="spectral tau is drawn toward twice the top eigenvalue (DESIGN.md)")
    def test_eig_spectral_flat_over_grid(self):
        records = run_sweep(SweepConfig(problem="eig", policies=("spectral",)))
        assert _iteration_spread(records) <= 10.0


class TestRunTable:
    def test_one_record_per_problem_and_policy(self):
        cfg = TableConfig(problems=("regression", "eig"), policies=("constant", "spectral"), max_iter=20)
        records = run_table(cfg)
        assert len(records) == 4
        assert {(r.problem, r.policy) for r in records} == {
            ("regression", "constant"),
            ("regression", "spectral"),
            ("eig", "constant"),
            ("eig", "spectral"),
        }
        assert all(r.tau0 == config.DEFAULT_TAU0 for r in records)


# =============================================================================
# Tests for records
# =============================================================================


class TestRecords:
    """Tests for BenchRecord serialization and tables."""

    def test_csv_roundtrip(self, tmp_path):
        records = [record(), record(policy="constant", objective=math.inf, psnr=31.5, converged=False)]
        path = write_records_csv(tmp_path / "r.csv", records)
        assert read_records_csv(path) == records

    def test_json_roundtrip_with_reports(self, tmp_path):
        path = write_records_json(tmp_path / "r.json", [record()], reports=[{"problem": "regression"}])
        payload = json.loads(path.read_text())
        assert payload["schema_version"] == config.RECORD_SCHEMA_VERSION
        assert payload["reports"] == [{"problem": "regression"}]
        assert read_records_json(path) == [record()]

    def test_unknown_field_rejected(self):
        data = record().to_dict()
        data["colour"] = "red"
        with pytest.raises(ValidationError):
            BenchRecord.from_dict(data)

    def test_missing_field_rejected(self):
        data = record().to_dict()
        del data["objective"]
        with pytest.raises(ValidationError):
            BenchRecord.from_dict(data)

    def test_wrong_schema_version_rejected(self):
        data = record().to_dict()
        data["schema_version"] = 99
        with pytest.raises(ValidationError):
            BenchRecord.from_dict(data)

    def test_format_table(self):
        records = [
            record(policy="constant", iterations=2000, converged=False, status="max_iter"),
            record(policy="spectral", iterations=42, wall_ms=1500.0),
            record(problem="denoise2d", policy="spectral", psnr=30.0),
        ]
        lines = format_table(records, ["constant", "spectral"]).splitlines()
        assert lines[0].split() == ["problem", "dataset", "order", "constant", "spectral"]
        assert set(lines[1]) == {"-"}
        assert "2000+(0.020)" in lines[2]
        assert "42(1.500) 3.25" in lines[2]
        assert lines[3].split()[3] == "-"
        assert lines[3].endswith("30.0dB")


class TestExportOutputs:
    """Tests for export_outputs()."""

    def test_vector_output(self, tmp_path):
        case = build_case("denoise1d")
        result = run_cell(case, "spectral", 1.0, "smooth_first", 1e-3, 10, record_trace=True)
        report = result.report
        output = case.instance.output(report.final_u, report.final_v)
        data_path, report_path = export_outputs(report, output, tmp_path, "signal")
        assert data_path.suffix == ".csv"
        np.testing.assert_allclose(read_csv_matrix(data_path)[:, 0], output)
        saved = json.loads(report_path.read_text())
        assert len(saved["trace"]) == report.iterations

    def test_image_output(self, tmp_path):
        case = build_case("denoise2d")
        result = run_cell(case, "constant", 1.0, "smooth_first", 1e-3, 3)
        report = result.report
        output = case.instance.output(report.final_u, report.final_v)
        data_path, report_path = export_outputs(report, output, tmp_path, "image", include_trace=False)
        assert data_path.suffix == ".pgm"
        assert read_image_gray(data_path).shape == config.IMAGE_SHAPE
        assert "trace" not in json.loads(report_path.read_text())


# =============================================================================
# Tests for the command line
# =============================================================================


class TestCli:
    """Tests for parse_tau_grid() and main() exit codes."""

    def test_log_grid(self):
        grid = parse_tau_grid("1e-3:1e3:25")
        assert len(grid) == 25
        assert grid[0] == pytest.approx(1e-3)
        assert grid[-1] == pytest.approx(1e3)
        np.testing.assert_allclose(grid, config.DEFAULT_TAU_GRID)

    def test_list_grid(self):
        assert parse_tau_grid("0.1, 1,10") == (0.1, 1.0, 10.0)

    def test_bad_grid(self):
        with pytest.raises(ValidationError):
            parse_tau_grid("a:b:c")

    def test_sweep_writes_outputs(self, tmp_path, capsys):
        argv = ["sweep", "--problem", "eig", "--policy", "constant", "--tau-grid", "250,500"]
        argv += ["--max-iter", "10", "--out", str(tmp_path)]
        assert main(argv) == 0
        assert len(read_records_csv(tmp_path / "sweep_eig.csv")) == 2
        assert (tmp_path / "sweep_eig.json").exists()
        assert "SUMMARY" in capsys.readouterr().out

    def test_table_writes_outputs(self, tmp_path):
        argv = ["table", "--problem", "eig", "--policy", "constant,spectral", "--max-iter", "10"]
        argv += ["--out", str(tmp_path)]
        assert main(argv) == 0
        assert len(read_records_csv(tmp_path / "table.csv")) == 2
        assert (tmp_path / "table.txt").exists()

    def test_solve_exports(self, tmp_path):
        argv = ["solve", "--problem", "denoise1d", "--policy", "spectral", "--max-iter", "10"]
        argv += ["--out", str(tmp_path)]
        assert main(argv) == 0
        assert (tmp_path / "denoise1d_spectral_smooth_first.csv").exists()
        saved = json.loads((tmp_path / "denoise1d_spectral_smooth_first.json").read_text())
        assert saved["policy_params"]["kind"] == "spectral"
        assert saved["policy_params"]["period"] == config.SPECTRAL_PERIOD

    def test_solve_reports_truth_error(self, capsys):
        assert main(["solve", "--problem", "regression", "--policy", "constant", "--max-iter", "5"]) == 0
        assert "Relative error to truth" in capsys.readouterr().out

    def test_invalid_configuration_exit_code(self, tmp_path):
        argv = ["sweep", "--problem", "eig", "--policy", "magic", "--out", str(tmp_path)]
        assert main(argv) == 2

    def test_missing_dataset_exit_code(self, tmp_path):
        argv = ["sweep", "--problem", "denoise2d", "--dataset", str(tmp_path / "gone.pgm")]
        argv += ["--out", str(tmp_path)]
        assert main(argv) == 3

    def test_config_file(self, tmp_path):
        path = tmp_path / "sweep.json"
        settings = {"problem": "eig", "policies": ["constant"], "tau_grid": [250], "max_iter": 5}
        path.write_text(json.dumps(settings))
        assert main(["sweep", "--config", str(path), "--out", str(tmp_path)]) == 0
        assert len(read_records_csv(tmp_path / "sweep_eig.csv")) == 1

    def test_bad_config_json(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text("{not json")
        assert main(["sweep", "--config", str(path)]) == 2
