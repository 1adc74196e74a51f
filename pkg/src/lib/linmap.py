"""
Linear maps and the ADMM constraint system Au + Bv = b.

Vectors are flat 1-D numpy arrays. Complex maps use the conjugate inner
product, so adjoint_apply is the Hermitian adjoint.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from src.lib.errors import ValidationError

FIELDS = ("real", "complex")


def inner(x: np.ndarray, y: np.ndarray) -> float:
    """Real part of the conjugate inner product <x, y>."""
    return float(np.real(np.vdot(x, y)))


class LinearMap(ABC):
    """Linear operator from a vector of length in_dim to length out_dim."""

    def __init__(self, in_dim: int, out_dim: int, field: str = "real"):
        if in_dim < 1 or out_dim < 1:
            raise ValidationError(f"dimensions must be positive, got {in_dim}, {out_dim}")
        if field not in FIELDS:
            raise ValidationError(f"field must be one of {FIELDS}, got {field!r}")
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.field = field

    @property
    def dtype(self):
        return np.complex128 if self.field == "complex" else np.float64

    @abstractmethod
    def apply(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def adjoint_apply(self, y: np.ndarray) -> np.ndarray: ...

    def __neg__(self) -> "LinearMap":
        return ScaledMap(self, -1.0)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.out_dim}x{self.in_dim}, {self.field})"


class MatrixMap(LinearMap):
    """Dense matrix operator."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            raise ValidationError(f"expected a 2-D matrix, got shape {matrix.shape}")
        field = "complex" if np.iscomplexobj(matrix) else "real"
        super().__init__(matrix.shape[1], matrix.shape[0], field)
        self.matrix = matrix

    def apply(self, x):
        return self.matrix @ x

    def adjoint_apply(self, y):
        return self.matrix.conj().T @ y


class IdentityMap(LinearMap):
    def __init__(self, dim: int, field: str = "real"):
        super().__init__(dim, dim, field)

    def apply(self, x):
        return x.copy()

    def adjoint_apply(self, y):
        return y.copy()


class ScaledMap(LinearMap):
    """scale * base, for a real scalar scale."""

    def __init__(self, base: LinearMap, scale: float):
        super().__init__(base.in_dim, base.out_dim, base.field)
        self.base = base
        self.scale = float(scale)

    def apply(self, x):
        return self.scale * self.base.apply(x)

    def adjoint_apply(self, y):
        return self.scale * self.base.adjoint_apply(y)


@dataclass(frozen=True)
class ConstraintSystem:
    """The coupling constraint Au + Bv = b."""

    A: LinearMap
    B: LinearMap
    b: np.ndarray

    def __post_init__(self):
        if self.A.out_dim != self.B.out_dim or self.A.out_dim != len(self.b):
            raise ValidationError(
                f"constraint dimensions disagree: A is {self.A.out_dim} rows, "
                f"B is {self.B.out_dim} rows, b has length {len(self.b)}"
            )
        if self.A.field != self.B.field:
            raise ValidationError(f"A is {self.A.field} but B is {self.B.field}")
        if np.iscomplexobj(self.b) and self.A.field == "real":
            raise ValidationError("complex b with a real constraint system")

    @property
    def field(self) -> str:
        return self.A.field

    def primal_residual(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.b - self.A.apply(u) - self.B.apply(v)
