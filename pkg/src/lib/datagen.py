"""
Seeded synthetic datasets and measurement operators.

Every generator draws from its own numpy PCG64 stream seeded by the
caller, in a fixed order, so a seed always yields the same dataset.
"""

import math

import numpy as np
import scipy.fft

from src.lib import config
from src.lib.errors import ValidationError
from src.lib.linmap import LinearMap

OCTANARY_PHASES = np.array([1.0, -1.0, 1.0j, -1.0j])
OCTANARY_AMPLITUDES = (math.sqrt(2.0) / 2.0, math.sqrt(3.0))


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator for seed; stream > 0 selects an independent child stream of the same seed."""
    if seed < 0 or seed >= 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if stream == 0:
        return np.random.Generator(np.random.PCG64(int(seed)))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream,))))


def _complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Circular complex normal with unit variance; real parts drawn first."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) / math.sqrt(2.0)


# =============================================================================
# l0 regression
# =============================================================================


def gen_regression_synthetic(seed: int, noise_std: float = 0.1):
    """
    50 x 40 design with three groups of five correlated columns.

    Columns 1-5, 6-10 and 11-15 share a base vector plus independent
    N(0, 1) perturbations; columns 16-40 are standard normal. The target
    has 3 in the first 15 coefficients and 0 elsewhere.
    Returns (D, c, x_star).
    """
    rng = make_rng(seed)
    n_samples, n_features = 50, 40
    bases = rng.standard_normal((3, n_samples))
    D = rng.standard_normal((n_samples, n_features))
    for group in range(3):
        D[:, 5 * group : 5 * group + 5] += bases[group][:, None]
    x_star = np.zeros(n_features)
    x_star[:15] = 3.0
    c = D @ x_star + noise_std * rng.standard_normal(n_samples)
    return D, c, x_star


# =============================================================================
# Denoising
# =============================================================================


def gen_piecewise_signal(
    seed: int,
    n: int = config.SIGNAL_LENGTH,
    segments: int = config.SIGNAL_SEGMENTS,
    target_psnr: float = config.SIGNAL_TARGET_PSNR,
):
    """
    Piecewise-constant signal with levels uniform in [0, 5], plus Gaussian
    noise scaled so the noisy copy has exactly target_psnr against the
    clean one (peak = max |clean|). target_psnr = inf gives no noise.
    Returns (clean, noisy).
    """
    if not 1 <= segments <= n:
        raise ValidationError(f"segments must lie in [1, {n}], got {segments}")
    rng = make_rng(seed)
    breaks = np.sort(rng.choice(np.arange(1, n), size=segments - 1, replace=False))
    levels = rng.uniform(0.0, 5.0, size=segments)
    clean = np.concatenate(
        [np.full(len(piece), level) for piece, level in zip(np.split(np.arange(n), breaks), levels)]
    )
    return clean, _calibrated(clean, rng.standard_normal(n), target_psnr)


def add_calibrated_noise(clean: np.ndarray, target_psnr: float = config.SIGNAL_TARGET_PSNR, seed: int = 0):
    """Gaussian noise scaled so the result has exactly target_psnr against clean."""
    clean = np.asarray(clean, dtype=float)
    return _calibrated(clean, make_rng(seed).standard_normal(clean.shape), target_psnr)


def _calibrated(clean: np.ndarray, z: np.ndarray, target_psnr: float) -> np.ndarray:
    if math.isinf(target_psnr):
        return clean.copy()
    peak = np.max(np.abs(clean))
    rms = peak * 10.0 ** (-target_psnr / 20.0)
    return clean + z * (rms / np.sqrt(np.mean(z**2)))


def gen_piecewise_image(seed: int, shape=config.IMAGE_SHAPE, rectangles: int = 8) -> np.ndarray:
    """Flat background with overlapping constant rectangles, levels in [0, 255]."""
    rng = make_rng(seed)
    h, w = shape
    img = np.full((h, w), rng.uniform(0.0, 255.0))
    for _ in range(rectangles):
        top, left = rng.integers(0, h - 1), rng.integers(0, w - 1)
        bottom = rng.integers(top + 1, h + 1)
        right = rng.integers(left + 1, w + 1)
        img[top:bottom, left:right] = rng.uniform(0.0, 255.0)
    return img


def add_gaussian_noise(img: np.ndarray, sigma: float = config.DEFAULT_NOISE_SIGMA, seed: int = 0):
    """Additive N(0, sigma^2) noise; values are not clamped."""
    if sigma < 0:
        raise ValidationError(f"sigma must be nonnegative, got {sigma}")
    img = np.asarray(img, dtype=float)
    if sigma == 0:
        return img.copy()
    return img + sigma * make_rng(seed).standard_normal(img.shape)


# =============================================================================
# Phase retrieval
# =============================================================================


def gen_phase_retrieval_synthetic(
    seed: int, shape=config.PHASE_SHAPE, noise_std: float = config.PHASE_NOISE_STD
):
    """
    Complex Gaussian D (m x n), signal x and noise e with c = abs(Dx + noise_std * e).
    noise_std = 0 gives noiseless magnitudes; e is drawn either way, so D
    and x do not depend on it. Returns (D, x, c).
    """
    if noise_std < 0:
        raise ValidationError(f"noise_std must be nonnegative, got {noise_std}")
    m, n = shape
    rng = make_rng(seed)
    D = _complex_normal(rng, (m, n))
    x = _complex_normal(rng, n)
    e = _complex_normal(rng, m)
    return D, x, np.abs(D @ x + noise_std * e)


class CodedDiffractionOperator(LinearMap):
    """
    Masked unitary 2-D DFTs: y_j = F(mask_j * x) for each mask, stacked.

    D^H D is the diagonal sum_j |mask_j|^2, exposed as normal_diagonal.
    """

    def __init__(self, masks: np.ndarray):
        masks = np.asarray(masks, dtype=np.complex128)
        if masks.ndim != 3:
            raise ValidationError(f"masks must have shape (count, h, w), got {masks.shape}")
        self.masks = masks
        self.shape = masks.shape[1:]
        size = int(np.prod(self.shape))
        super().__init__(size, size * masks.shape[0], "complex")
        self.normal_diagonal = np.sum(np.abs(masks) ** 2, axis=0).ravel()

    def apply(self, x):
        x = np.asarray(x).reshape(self.shape)
        return scipy.fft.fft2(self.masks * x, norm="ortho").ravel()

    def adjoint_apply(self, y):
        y = np.asarray(y).reshape(self.masks.shape)
        return np.sum(self.masks.conj() * scipy.fft.ifft2(y, norm="ortho"), axis=0).ravel()


def gen_octanary_masks(shape, seed: int, count: int = config.NUM_OCTANARY_MASKS):
    """
    Octanary coded-diffraction masks: each entry is b1 * b2 with b1 uniform
    on {1, -1, i, -i} and b2 = sqrt(2)/2 w.p. 4/5, sqrt(3) w.p. 1/5.
    """
    rng = make_rng(seed)
    size = (count, *shape)
    b1 = OCTANARY_PHASES[rng.integers(0, 4, size=size)]
    b2 = np.where(rng.random(size) < 0.8, *OCTANARY_AMPLITUDES)
    return CodedDiffractionOperator(b1 * b2)


# =============================================================================
# Eigenvector
# =============================================================================


def gen_eig_matrix(seed: int, n: int = config.EIG_SIZE) -> np.ndarray:
    return make_rng(seed).standard_normal((n, n))


def random_unit_vector(seed: int, n: int) -> np.ndarray:
    """Uniform direction from a child stream, so it is independent of gen_eig_matrix(seed)."""
    z = make_rng(seed, stream=1).standard_normal(n)
    return z / np.linalg.norm(z)
