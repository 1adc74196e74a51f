"""
Linear solvers for the smooth ADMM sub-problems.

The dense solvers cache one factorization per penalty value, so repeated
iterations at a fixed tau only pay for triangular solves.
"""

import logging
import threading

import numpy as np
import scipy.fft
import scipy.linalg

from src.lib.errors import SolverError, ValidationError
from src.lib.linmap import LinearMap, MatrixMap

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
RANK_TOL = 1e-12
CACHE_SIZE = 8


class _FactorCache:
    """Small tau-keyed cache guarded by a lock."""

    def __init__(self, factorize, size: int = CACHE_SIZE):
        self._factorize = factorize
        self._size = size
        self._entries = {}
        self._lock = threading.Lock()

    def get(self, tau: float):
        key = float(tau)
        with self._lock:
            hit = self._entries.get(key)
        if hit is not None:
            return hit
        factor = self._factorize(key)
        with self._lock:
            if len(self._entries) >= self._size:
                self._entries.pop(next(iter(self._entries)))
            self._entries[key] = factor
        return factor

    def __len__(self):
        return len(self._entries)


# =============================================================================
# l0 regression: (D^T D + tau I) u = tau v + lam + D^T c
# =============================================================================


class CachedRegressionSolver:
    """
    Solves the regression u-step for a fixed data matrix D (n x m).

    The Gram branch factors D^T D + tau I_m when n >= m; the Woodbury branch
    factors tau I_n + D D^T when n < m.
    """

    def __init__(self, D: np.ndarray, c: np.ndarray):
        D = np.asarray(D, dtype=float)
        c = np.asarray(c, dtype=float)
        if D.ndim != 2 or D.shape[0] != c.shape[0]:
            raise ValidationError(f"D {D.shape} and c {c.shape} are inconsistent")
        self.D = D
        self.DT_c = D.T @ c
        n, m = D.shape
        self.branch = "gram" if n >= m else "woodbury"
        self._gram = D.T @ D if self.branch == "gram" else D @ D.T
        self._cache = _FactorCache(self._factorize)

    def _factorize(self, tau: float):
        system = self._gram + tau * np.eye(self._gram.shape[0])
        try:
            return scipy.linalg.cho_factor(system)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"Cholesky factorization failed at tau={tau}: {exc}") from exc

    def solve(self, v: np.ndarray, lam: np.ndarray, tau: float) -> np.ndarray:
        if not tau > 0:
            raise SolverError(f"penalty must be positive, got {tau}")
        factor = self._cache.get(tau)
        if self.branch == "gram":
            return scipy.linalg.cho_solve(factor, tau * v + lam + self.DT_c)
        w = v + lam / tau + self.DT_c / tau
        return w - self.D.T @ scipy.linalg.cho_solve(factor, self.D @ w)


def regression_solve(s: CachedRegressionSolver, v, lam, tau: float) -> np.ndarray:
    return s.solve(v, lam, tau)


# =============================================================================
# Periodic discrete gradient, diagonalized by the DFT
# =============================================================================


class GradientOperator(LinearMap):
    """
    Forward differences with wraparound on a 1-D signal or a 2-D image.

    Images are flattened row-major; the 2-D output stacks the horizontal
    differences followed by the vertical ones (length 2*h*w).
    """

    def __init__(self, shape):
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        if len(shape) not in (1, 2) or min(shape) < 1:
            raise ValidationError(f"gradient shape must be (n,) or (h, w), got {shape}")
        self.shape = shape
        size = int(np.prod(shape))
        super().__init__(size, size * len(shape), "real")
        self.multipliers = self._spectral_multipliers()

    def _spectral_multipliers(self) -> np.ndarray:
        axes = [2.0 - 2.0 * np.cos(2.0 * np.pi * np.fft.fftfreq(n)) for n in self.shape]
        if len(axes) == 1:
            return axes[0]
        return axes[0][:, None] + axes[1][None, :]

    def apply(self, x):
        x = np.asarray(x).reshape(self.shape)
        if len(self.shape) == 1:
            return np.roll(x, -1) - x
        dx = np.roll(x, -1, axis=1) - x
        dy = np.roll(x, -1, axis=0) - x
        return np.concatenate([dx.ravel(), dy.ravel()])

    def adjoint_apply(self, y):
        y = np.asarray(y)
        if len(self.shape) == 1:
            return np.roll(y, 1) - y
        size = self.in_dim
        dx = y[:size].reshape(self.shape)
        dy = y[size:].reshape(self.shape)
        out = (np.roll(dx, 1, axis=1) - dx) + (np.roll(dy, 1, axis=0) - dy)
        return out.ravel()

    def dense(self) -> np.ndarray:
        """Explicit matrix, for small shapes only."""
        return np.column_stack([self.apply(e) for e in np.eye(self.in_dim)])


def fft_denoise_solve(g: GradientOperator, c, v, lam, tau: float) -> np.ndarray:
    """(I + tau grad^T grad)^{-1} (c + tau grad^T (v + lam/tau)), via the DFT."""
    if not tau > 0:
        raise SolverError(f"penalty must be positive, got {tau}")
    rhs = np.asarray(c, dtype=float) + g.adjoint_apply(tau * v + lam)
    spectrum = scipy.fft.fftn(rhs.reshape(g.shape)) / (1.0 + tau * g.multipliers)
    return np.real(scipy.fft.ifftn(spectrum)).ravel()


# =============================================================================
# Least squares for the phase retrieval v-step
# =============================================================================


class LeastSquaresSolver:
    """
    argmin_v ||D v - y|| for a full column rank D.

    Operators exposing ``normal_diagonal`` (D^H D diagonal) are solved
    elementwise; dense matrices use a cached economic QR factorization.
    """

    def __init__(self, D):
        self.diagonal = getattr(D, "normal_diagonal", None)
        self.operator = D if isinstance(D, LinearMap) else None
        if self.diagonal is not None:
            if np.any(self.diagonal <= 0):
                raise SolverError("operator normal matrix is singular")
            return
        matrix = D.matrix if isinstance(D, MatrixMap) else np.asarray(D)
        if matrix.ndim != 2:
            raise ValidationError("least squares needs a matrix or a diagonal-normal operator")
        q, r = scipy.linalg.qr(matrix, mode="economic")
        diag = np.abs(np.diag(r))
        if diag.size < matrix.shape[1] or diag.min() <= RANK_TOL * max(diag.max(), 1.0):
            raise SolverError(f"matrix of shape {matrix.shape} is rank deficient")
        self._q = q
        self._r = r

    def solve(self, y: np.ndarray) -> np.ndarray:
        if self.diagonal is not None:
            return self.operator.adjoint_apply(y) / self.diagonal
        return scipy.linalg.solve_triangular(self._r, self._q.conj().T @ y)


def least_squares_solve(D, y) -> np.ndarray:
    return LeastSquaresSolver(D).solve(y)


# =============================================================================
# Eigenvector u-step: (tau I - 2 D^T D) u = tau v + lam
# =============================================================================


class ShiftedEigSolver:
    """
    Solves the stationary system of the eigenvector u-step.

    The shift may be indefinite, so an LU factorization is used; the
    condition number is read off the eigenvalues of D^T D.
    """

    def __init__(self, D: np.ndarray):
        D = np.asarray(D, dtype=float)
        self.DtD = D.T @ D
        self.eigenvalues = scipy.linalg.eigvalsh(self.DtD)
        self._cache = _FactorCache(self._factorize)

    def condition(self, tau: float) -> float:
        shifted = np.abs(tau - 2.0 * self.eigenvalues)
        smallest = shifted.min()
        return np.inf if smallest == 0 else float(shifted.max() / smallest)

    def _factorize(self, tau: float):
        cond = self.condition(tau)
        if cond > CONDITION_LIMIT:
            raise SolverError(
                f"tau={tau} is within roundoff of twice an eigenvalue (condition {cond:.3g})"
            )
        return scipy.linalg.lu_factor(tau * np.eye(self.DtD.shape[0]) - 2.0 * self.DtD)

    def solve(self, v: np.ndarray, lam: np.ndarray, tau: float) -> np.ndarray:
        return scipy.linalg.lu_solve(self._cache.get(tau), tau * v + lam)


def shifted_solve_eig(D, v, lam, tau: float) -> np.ndarray:
    return ShiftedEigSolver(D).solve(v, lam, tau)
