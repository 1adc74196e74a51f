"""
Closed-form proximal and projection operators for the ADMM sub-problems.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HardThresholdSpec:
    """Prox weight t of the l0 norm; entries at or below sqrt(2t) are zeroed."""

    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"prox weight must be positive, got {self.t}")

    @property
    def threshold(self) -> float:
        return float(np.sqrt(2.0 * self.t))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return hard(z, self.t)


def hard(z: np.ndarray, t: float) -> np.ndarray:
    """
    Proximal operator of the l0 norm:
    argmin_x ||x||_0 + (1/2t)||x - z||^2, elementwise.

    Keeps z_i when |z_i| > sqrt(2t) (strict), zeroes it otherwise.
    t = 0 keeps every nonzero entry.
    """
    if t < 0:
        raise ValueError(f"prox weight must be nonnegative, got {t}")
    z = np.asarray(z)
    return np.where(np.abs(z) > np.sqrt(2.0 * t), z, 0)


def unit_phase(z: np.ndarray) -> np.ndarray:
    """Elementwise z/|z| with the phase of 0 taken as 1."""
    z = np.asarray(z)
    mag = np.abs(z)
    safe = np.where(mag > 0, mag, 1.0)
    return np.where(mag > 0, z / safe, 1.0)


def abs_proj(z: np.ndarray, c: np.ndarray, t: float) -> np.ndarray:
    """
    Minimizer of 1/2 ||abs(x) - c||^2 + t/2 ||x - z||^2.

    Averages the magnitudes, (t|z| + c)/(1 + t), and keeps the phase of z.
    """
    z = np.asarray(z)
    c = np.asarray(c, dtype=float)
    if z.shape != c.shape:
        raise ValueError(f"shape mismatch: z {z.shape} vs c {c.shape}")
    if np.any(c < 0):
        raise ValueError("magnitudes c must be nonnegative")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    magnitude = (t * np.abs(z) + c) / (1.0 + t)
    return magnitude * unit_phase(z)


def sphere_project(z: np.ndarray) -> np.ndarray:
    """Projection onto the unit sphere, z / ||z||."""
    z = np.asarray(z)
    norm = np.linalg.norm(z)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("cannot project a zero or non-finite vector onto the sphere")
    return z / norm


def l0_norm(z: np.ndarray, atol: float = 0.0) -> int:
    """Number of entries with |z_i| > atol."""
    if atol < 0:
        raise ValueError(f"atol must be nonnegative, got {atol}")
    return int(np.count_nonzero(np.abs(np.asarray(z)) > atol))
