"""
The four nonconvex applications as ADMM problem instances:
l0 regression, l0 gradient denoising, phase retrieval, leading eigenvector.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.lib import config
from src.lib.datagen import random_unit_vector
from src.lib.engine import ProblemInstance
from src.lib.errors import SolverError, ValidationError
from src.lib.linmap import ConstraintSystem, IdentityMap, LinearMap, MatrixMap
from src.lib.linsolve import (
    CachedRegressionSolver,
    GradientOperator,
    LeastSquaresSolver,
    ShiftedEigSolver,
    fft_denoise_solve,
)
from src.lib.prox import abs_proj, hard, l0_norm, sphere_project


@dataclass(frozen=True)
class RegressionProblem:
    """min 1/2 ||D x - c||^2 + rho ||x||_0"""

    D: np.ndarray
    c: np.ndarray
    rho: float = config.RHO_DEFAULTS["regression"]

    def __post_init__(self):
        if self.D.ndim != 2 or self.D.shape[0] != len(self.c):
            raise ValidationError(f"D {self.D.shape} does not match c of length {len(self.c)}")
        if self.rho < 0:
            raise ValidationError(f"rho must be nonnegative, got {self.rho}")


@dataclass(frozen=True)
class DenoiseProblem:
    """min 1/2 ||x - c||^2 + rho ||grad x||_0 on a 1-D signal or 2-D image."""

    c: np.ndarray
    rho: float = config.RHO_DEFAULTS["denoise1d"]

    def __post_init__(self):
        if self.c.ndim not in (1, 2):
            raise ValidationError(f"c must be a signal or an image, got shape {self.c.shape}")
        if self.rho < 0:
            raise ValidationError(f"rho must be nonnegative, got {self.rho}")

    @property
    def grad(self) -> GradientOperator:
        return GradientOperator(self.c.shape)


@dataclass(frozen=True)
class PhaseRetrievalProblem:
    """min 1/2 ||abs(D x) - c||^2 over complex x."""

    D: LinearMap
    c: np.ndarray
    image_shape: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.D.out_dim != len(self.c):
            raise ValidationError(f"D has {self.D.out_dim} rows but c has length {len(self.c)}")
        if np.any(self.c < 0):
            raise ValidationError("magnitudes c must be nonnegative")


@dataclass(frozen=True)
class EigProblem:
    """max ||D x||^2 subject to ||x|| = 1."""

    D: np.ndarray
    seed: int = config.DEFAULT_SEED


def _equality_system(dim: int, field: str = "real") -> ConstraintSystem:
    """u - v = 0"""
    dtype = np.complex128 if field == "complex" else np.float64
    return ConstraintSystem(IdentityMap(dim, field), -IdentityMap(dim, field), np.zeros(dim, dtype))


# =============================================================================
# Builders
# =============================================================================


def build_l0_regression(p: RegressionProblem) -> ProblemInstance:
    D = np.asarray(p.D, dtype=float)
    c = np.asarray(p.c, dtype=float)
    m = D.shape[1]
    solver = CachedRegressionSolver(D, c)
    rho = p.rho

    def solve_u(v, lam, tau):
        return solver.solve(v, lam, tau)

    def solve_v(u, lam, tau):
        return hard(u - lam / tau, rho / tau)

    def objective(u, v):
        return 0.5 * np.sum((D @ v - c) ** 2) + rho * l0_norm(v)

    zeros = np.zeros(m)
    return ProblemInstance(
        constraint=_equality_system(m),
        solve_u=solve_u,
        solve_v=solve_v,
        objective=objective,
        init=(zeros, zeros.copy(), zeros.copy()),
        name="regression",
    )


def build_l0_denoise(p: DenoiseProblem) -> ProblemInstance:
    grad = p.grad
    shape = p.c.shape
    c = np.asarray(p.c, dtype=float).ravel()
    rho = p.rho
    cs = ConstraintSystem(grad, -IdentityMap(grad.out_dim), np.zeros(grad.out_dim))

    def solve_u(v, lam, tau):
        return fft_denoise_solve(grad, c, v, lam, tau)

    def solve_v(u, lam, tau):
        return hard(grad.apply(u) - lam / tau, rho / tau)

    def objective(u, v):
        return 0.5 * np.sum((u - c) ** 2) + rho * l0_norm(grad.apply(u))

    def recover(u, v):
        return u.reshape(shape)

    return ProblemInstance(
        constraint=cs,
        solve_u=solve_u,
        solve_v=solve_v,
        objective=objective,
        init=(np.zeros(grad.in_dim), np.zeros(grad.out_dim), np.zeros(grad.out_dim)),
        name="denoise1d" if len(shape) == 1 else "denoise2d",
        recover=recover,
    )


def build_phase_retrieval(p: PhaseRetrievalProblem) -> ProblemInstance:
    D = p.D if isinstance(p.D, LinearMap) else MatrixMap(np.asarray(p.D))
    c = np.asarray(p.c, dtype=float)
    m, n = D.out_dim, D.in_dim
    ls = LeastSquaresSolver(D)
    cs = ConstraintSystem(IdentityMap(m, "complex"), -D, np.zeros(m, np.complex128))

    def solve_u(v, lam, tau):
        return abs_proj(D.apply(v) + lam / tau, c, tau)

    def solve_v(u, lam, tau):
        return ls.solve(u - lam / tau)

    def objective(u, v):
        return 0.5 * np.sum((np.abs(D.apply(v)) - c) ** 2)

    def recover_image(u, v):
        return np.abs(v).reshape(p.image_shape)

    return ProblemInstance(
        constraint=cs,
        solve_u=solve_u,
        solve_v=solve_v,
        objective=objective,
        init=(np.zeros(m, np.complex128), np.zeros(n, np.complex128), np.zeros(m, np.complex128)),
        name="phase" if p.image_shape is None else "phase_image",
        recover=None if p.image_shape is None else recover_image,
    )


def build_eigenvector(p: EigProblem) -> ProblemInstance:
    D = np.asarray(p.D, dtype=float)
    n = D.shape[1]
    solver = ShiftedEigSolver(D)

    def solve_u(v, lam, tau):
        return solver.solve(v, lam, tau)

    def solve_v(u, lam, tau):
        try:
            return sphere_project(u - lam / tau)
        except ValueError as exc:
            raise SolverError(f"eigenvector v-step: {exc}") from exc

    def objective(u, v):
        return -float(np.sum((D @ v) ** 2))

    v0 = random_unit_vector(p.seed, n)
    return ProblemInstance(
        constraint=_equality_system(n),
        solve_u=solve_u,
        solve_v=solve_v,
        objective=objective,
        init=(v0.copy(), v0, np.zeros(n)),
        name="eig",
    )
