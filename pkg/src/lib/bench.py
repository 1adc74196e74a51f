"""
Benchmark harness: builds problem cases from generators or dataset files
and runs policy x tau0 x order sweeps and policy comparison tables.

Each cell is an independent solve. Cells of one sweep share the problem
instance (its factor caches are lock-guarded) and run in a thread pool;
results are sorted by (problem, policy, tau0, order) before they are
returned, so output order never depends on scheduling.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.lib import config
from src.lib.datagen import (
    add_calibrated_noise,
    add_gaussian_noise,
    gen_eig_matrix,
    gen_octanary_masks,
    gen_phase_retrieval_synthetic,
    gen_piecewise_image,
    gen_piecewise_signal,
    gen_regression_synthetic,
)
from src.lib.engine import ORDERS, ProblemInstance, SolveConfig, SolveReport, solve
from src.lib.errors import DatasetIOError, ValidationError
from src.lib.imageio import read_csv_matrix, read_image_gray
from src.lib.linmap import MatrixMap
from src.lib.metrics import align_global_phase, psnr, relative_error
from src.lib.policies import make_policy
from src.lib.problems import (
    DenoiseProblem,
    EigProblem,
    PhaseRetrievalProblem,
    RegressionProblem,
    build_eigenvector,
    build_l0_denoise,
    build_l0_regression,
    build_phase_retrieval,
)
from src.lib.records import BenchRecord

logger = logging.getLogger(__name__)

BOTH_ORDERS = "both"
SYNTHETIC = "synthetic"
TRUTH_ERROR_KINDS = ("regression", "phase", "phase_image")


# =============================================================================
# Configuration
# =============================================================================


def _validate_common(cfg, problem):
    order, eps_tol, max_iter = cfg.order, cfg.eps_tol, cfg.max_iter
    jobs, sigma, rho = cfg.jobs, cfg.sigma, cfg.rho
    if problem not in config.PROBLEM_KINDS:
        raise ValidationError(f"unknown problem {problem!r}; expected one of {config.PROBLEM_KINDS}")
    if order != BOTH_ORDERS and order not in ORDERS:
        raise ValidationError(f"order must be {BOTH_ORDERS!r} or one of {ORDERS}, got {order!r}")
    if not eps_tol >= 0:
        raise ValidationError(f"eps_tol must be nonnegative, got {eps_tol}")
    if max_iter is not None and max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    if jobs < 1:
        raise ValidationError(f"jobs must be >= 1, got {jobs}")
    if sigma < 0:
        raise ValidationError(f"sigma must be nonnegative, got {sigma}")
    if rho is not None and rho < 0:
        raise ValidationError(f"rho must be nonnegative, got {rho}")


def _validate_policies(policies):
    if not policies:
        raise ValidationError("policy list is empty")
    for kind in policies:
        if kind not in config.POLICY_KINDS:
            raise ValidationError(f"unknown policy {kind!r}; expected one of {config.POLICY_KINDS}")


def _from_mapping(cls, data: dict):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValidationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    values = dict(data)
    for key in ("tau_grid", "policies", "problems"):
        if key in values and values[key] is not None:
            values[key] = tuple(values[key])
    return cls(**values)


@dataclass(frozen=True)
class SweepConfig:
    problem: str
    dataset: Optional[str] = None
    seed: int = config.DEFAULT_SEED
    tau_grid: Tuple[float, ...] = config.DEFAULT_TAU_GRID
    policies: Tuple[str, ...] = config.TABLE_POLICIES
    order: str = ORDERS[0]
    eps_tol: float = config.DEFAULT_EPS_TOL
    max_iter: Optional[int] = None
    out: Optional[str] = None
    jobs: int = config.DEFAULT_JOBS
    rho: Optional[float] = None
    sigma: float = config.DEFAULT_NOISE_SIGMA
    record_trace: bool = False

    def __post_init__(self):
        _validate_common(self, self.problem)
        _validate_policies(self.policies)
        if not self.tau_grid:
            raise ValidationError("tau grid is empty")
        if any(not (t > 0 and np.isfinite(t)) for t in self.tau_grid):
            raise ValidationError(f"tau grid must be strictly positive and finite, got {self.tau_grid}")

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepConfig":
        """Build from a JSON config mapping; unknown keys are rejected."""
        return _from_mapping(cls, data)

    @property
    def orders(self) -> Tuple[str, ...]:
        return ORDERS if self.order == BOTH_ORDERS else (self.order,)

    @property
    def iteration_cap(self) -> int:
        return self.max_iter if self.max_iter is not None else config.MAX_ITER_DEFAULTS[self.problem]


@dataclass(frozen=True)
class TableConfig:
    problems: Tuple[str, ...]
    dataset: Optional[str] = None
    seed: int = config.DEFAULT_SEED
    tau0: float = config.DEFAULT_TAU0
    policies: Tuple[str, ...] = config.TABLE_POLICIES
    order: str = ORDERS[0]
    eps_tol: float = config.DEFAULT_EPS_TOL
    max_iter: Optional[int] = None
    out: Optional[str] = None
    jobs: int = config.DEFAULT_JOBS
    rho: Optional[float] = None
    sigma: float = config.DEFAULT_NOISE_SIGMA

    def __post_init__(self):
        if not self.problems:
            raise ValidationError("problem list is empty")
        if self.dataset is not None and len(self.problems) > 1:
            raise ValidationError("a dataset file can only be used with a single problem")
        for problem in self.problems:
            _validate_common(self, problem)
        _validate_policies(self.policies)

    @classmethod
    def from_mapping(cls, data: dict) -> "TableConfig":
        return _from_mapping(cls, data)

    def sweep_for(self, problem: str) -> SweepConfig:
        return SweepConfig(
            problem=problem,
            dataset=self.dataset,
            seed=self.seed,
            tau_grid=(self.tau0,),
            policies=self.policies,
            order=self.order,
            eps_tol=self.eps_tol,
            max_iter=self.max_iter,
            jobs=self.jobs,
            rho=self.rho,
            sigma=self.sigma,
        )


# =============================================================================
# Problem cases
# =============================================================================


@dataclass(frozen=True)
class BenchCase:
    """
    A built problem plus what is needed to score its output: the clean
    reference (for PSNR) and its peak value, or the ground truth vector.
    """

    kind: str
    dataset: str
    seed: int
    instance: ProblemInstance
    reference: Optional[np.ndarray] = None
    peak: Optional[float] = None
    truth: Optional[np.ndarray] = None

    def quality(self, report: SolveReport) -> Optional[float]:
        """PSNR of the recovered output, for problems with a clean reference."""
        if self.reference is None:
            return None
        out = self.instance.output(report.final_u, report.final_v)
        if not np.all(np.isfinite(out)):
            return None
        return psnr(out, self.reference, peak=self.peak)

    def truth_error(self, report: SolveReport) -> Optional[float]:
        """Relative error of the recovered vector; phase problems are aligned to the truth first."""
        if self.truth is None or self.kind not in TRUTH_ERROR_KINDS:
            return None
        x = report.final_v
        if np.iscomplexobj(x):
            x = align_global_phase(x, self.truth)
        return relative_error(x, self.truth)


def _dataset_label(dataset: Optional[str]) -> str:
    return Path(dataset).stem if dataset else SYNTHETIC


def resolve_dataset(dataset: Optional[str]) -> Optional[Path]:
    """A relative path missing from the working directory is looked up under DATA_DIR."""
    if not dataset:
        return None
    path = Path(dataset).expanduser()
    if not path.exists() and not path.is_absolute() and (config.DATA_DIR / path).exists():
        return config.DATA_DIR / path
    return path


def _rho(kind: str, rho: Optional[float]) -> float:
    if rho is not None:
        return rho
    return config.RHO_DEFAULTS[kind]


def build_case(
    kind: str,
    dataset: Optional[str] = None,
    seed: int = config.DEFAULT_SEED,
    rho: Optional[float] = None,
    sigma: float = config.DEFAULT_NOISE_SIGMA,
) -> BenchCase:
    """
    Build a benchmark case.

    Without a dataset the seeded synthetic generator for the kind is used.
    Dataset files: regression takes a CSV whose last column is c; denoise1d
    a one-column CSV clean signal; denoise2d and phase_image any grayscale
    image; eig a CSV matrix. phase is synthetic only.
    """
    label = _dataset_label(dataset)
    path = resolve_dataset(dataset)
    if path is not None and not path.exists():
        raise DatasetIOError(f"{kind}: dataset {path} does not exist")

    if kind == "regression":
        x_star = None
        if path is None:
            D, c, x_star = gen_regression_synthetic(seed)
        else:
            data = read_csv_matrix(path)
            if data.shape[1] < 2:
                raise DatasetIOError(f"{path}: need at least one feature column and the target column")
            D, c = data[:, :-1], data[:, -1]
        inst = build_l0_regression(RegressionProblem(D, c, rho=_rho(kind, rho)))
        return BenchCase(kind, label, seed, inst, truth=x_star)

    if kind == "denoise1d":
        if path is None:
            clean, noisy = gen_piecewise_signal(seed)
        else:
            clean = read_csv_matrix(path)
            if clean.shape[1] != 1:
                raise DatasetIOError(f"{path}: expected a single-column signal, got {clean.shape[1]} columns")
            clean = clean[:, 0]
            noisy = add_calibrated_noise(clean, seed=seed)
        inst = build_l0_denoise(DenoiseProblem(noisy, rho=_rho(kind, rho)))
        return BenchCase(kind, label, seed, inst, reference=clean, peak=float(np.max(np.abs(clean))))

    if kind == "denoise2d":
        clean = gen_piecewise_image(seed) if path is None else read_image_gray(path)
        noisy = add_gaussian_noise(clean, sigma=sigma, seed=seed)
        inst = build_l0_denoise(DenoiseProblem(noisy, rho=_rho(kind, rho)))
        return BenchCase(kind, label, seed, inst, reference=clean, peak=255.0)

    if kind == "phase":
        if path is not None:
            raise ValidationError("phase is synthetic only; use phase_image for image datasets")
        D, x, c = gen_phase_retrieval_synthetic(seed)
        inst = build_phase_retrieval(PhaseRetrievalProblem(MatrixMap(D), c))
        return BenchCase(kind, label, seed, inst, truth=x)

    if kind == "phase_image":
        img = gen_piecewise_image(seed) if path is None else read_image_gray(path)
        op = gen_octanary_masks(img.shape, seed)
        c = np.abs(op.apply(img.ravel()))
        inst = build_phase_retrieval(PhaseRetrievalProblem(op, c, image_shape=img.shape))
        return BenchCase(kind, label, seed, inst, reference=img, peak=255.0, truth=img.ravel())

    if kind == "eig":
        D = gen_eig_matrix(seed) if path is None else read_csv_matrix(path)
        _, V = np.linalg.eigh(D.T @ D)
        inst = build_eigenvector(EigProblem(D, seed=seed))
        return BenchCase(kind, label, seed, inst, truth=V[:, -1])

    raise ValidationError(f"unknown problem {kind!r}; expected one of {config.PROBLEM_KINDS}")


# =============================================================================
# Cells
# =============================================================================


@dataclass
class CellResult:
    record: BenchRecord
    report: SolveReport


def run_cell(
    case: BenchCase,
    policy: str,
    tau0: float,
    order: str,
    eps_tol: float,
    max_iter: int,
    record_trace: bool = False,
) -> CellResult:
    """One solve. Non-converged cells report the iteration cap."""
    cfg = SolveConfig(
        eps_tol=eps_tol,
        max_iter=max_iter,
        order=order,
        policy=make_policy(policy),
        record_trace=record_trace,
        tau0=tau0,
    )
    start = time.perf_counter()
    report = solve(case.instance, cfg)
    wall_ms = (time.perf_counter() - start) * 1000.0

    logger.info(
        "%s/%s tau0=%g %s: %s after %d iterations",
        case.kind,
        policy,
        tau0,
        order,
        report.status,
        report.iterations,
    )
    record = BenchRecord(
        problem=case.kind,
        dataset=case.dataset,
        policy=policy,
        order=order,
        tau0=float(tau0),
        iterations=report.iterations if report.converged else max_iter,
        converged=report.converged,
        status=report.status,
        wall_ms=wall_ms,
        objective=report.final_objective,
        psnr=case.quality(report),
        seed=case.seed,
    )
    return CellResult(record, report)


def run_cells(cfg: SweepConfig, case: Optional[BenchCase] = None) -> List[CellResult]:
    """Every (policy, tau0, order) cell of the sweep, sorted by record key."""
    if case is None:
        try:
            case = build_case(cfg.problem, cfg.dataset, cfg.seed, cfg.rho, cfg.sigma)
        except DatasetIOError as exc:
            raise DatasetIOError(f"cell {cfg.problem}/{_dataset_label(cfg.dataset)}: {exc}") from exc

    cells = [(p, t, o) for p in cfg.policies for t in cfg.tau_grid for o in cfg.orders]

    def run(cell):
        policy, tau0, order = cell
        return run_cell(case, policy, tau0, order, cfg.eps_tol, cfg.iteration_cap, cfg.record_trace)

    if cfg.jobs == 1:
        results = [run(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run, cells))
    results.sort(key=lambda r: r.record.sort_key())
    return results


def run_sweep(cfg: SweepConfig) -> List[BenchRecord]:
    return [r.record for r in run_cells(cfg)]


def run_table_cells(cfg: TableConfig) -> List[CellResult]:
    results = []
    for problem in cfg.problems:
        results.extend(run_cells(cfg.sweep_for(problem)))
    return results


def run_table(cfg: TableConfig) -> List[BenchRecord]:
    """The comparison policies at one shared tau0 on every requested problem."""
    return [r.record for r in run_table_cells(cfg)]


def record_summary(records: Sequence[BenchRecord]) -> dict:
    statuses = {}
    for r in records:
        statuses[r.status] = statuses.get(r.status, 0) + 1
    return {"cells": len(records), "converged": sum(r.converged for r in records), "statuses": statuses}
