"""Recovery metrics for benchmark reports."""

import math
from typing import Optional

import numpy as np


def psnr(x: np.ndarray, ref: np.ndarray, peak: Optional[float] = None) -> float:
    """
    Peak signal-to-noise ratio of x against the clean reference, in dB.

    peak defaults to max |ref| (synthetic signals); pass 255 for 8-bit
    images. Returns inf when x equals ref.
    """
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")
    if peak is None:
        peak = float(np.max(np.abs(ref)))
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def phase_correlation(v: np.ndarray, x0: np.ndarray) -> float:
    """|<v, x0>| / (||v|| ||x0||): 1 means equal up to a global phase."""
    denom = np.linalg.norm(v) * np.linalg.norm(x0)
    if denom == 0:
        return 0.0
    return float(abs(np.vdot(v, x0)) / denom)


def align_global_phase(v: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """v rotated by the global phase that best matches x0."""
    rotation = np.vdot(v, x0)
    if rotation == 0:
        return v
    return v * (rotation / abs(rotation))


def eigvec_angle(v: np.ndarray, w: np.ndarray) -> float:
    """Angle in radians between the lines spanned by v and w."""
    cos = abs(np.vdot(v, w)) / (np.linalg.norm(v) * np.linalg.norm(w))
    return float(np.arccos(min(1.0, cos)))


def relative_error(x: np.ndarray, ref: np.ndarray) -> float:
    scale = np.linalg.norm(ref)
    diff = np.linalg.norm(np.asarray(x) - np.asarray(ref))
    return float(diff / scale) if scale > 0 else float(diff)
