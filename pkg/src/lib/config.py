"""
Configuration for admm-penalty-bench.
Paths and run defaults, overridable from the environment or a .env file.
"""

import os
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

load_dotenv()

# Paths
OUTPUT_DIR = Path(os.getenv("ADMM_BENCH_OUTPUT_DIR", "bench-output")).expanduser()
DATA_DIR = Path(os.getenv("ADMM_BENCH_DATA_DIR", "data")).expanduser()

# Runtime
DEFAULT_JOBS = int(os.getenv("ADMM_BENCH_JOBS", "1"))
LOG_LEVEL = os.getenv("ADMM_BENCH_LOG_LEVEL", "WARNING").upper()

# Solver defaults
DEFAULT_EPS_TOL = 1e-3
DIVERGENCE_LIMIT = 1e12
DEFAULT_TAU0 = 1.0

PROBLEM_KINDS = ("regression", "denoise1d", "denoise2d", "phase", "phase_image", "eig")

MAX_ITER_DEFAULTS = {
    "regression": 2000,
    "eig": 2000,
    "denoise1d": 2000,
    "denoise2d": 200,
    "phase": 200,
    "phase_image": 200,
}

RHO_DEFAULTS = {
    "regression": 1.0,
    "denoise1d": 1.0,
    "denoise2d": 500.0,
}

# Penalty policies
POLICY_KINDS = ("constant", "residual_balance", "spectral", "accelerated")
TABLE_POLICIES = ("constant", "residual_balance", "spectral")

TAU_MIN = 1e-6
TAU_MAX = 1e6
BALANCE_MU = 10.0
BALANCE_ETA = 2.0
SPECTRAL_PERIOD = 2
SPECTRAL_EPS_CORR = 0.2
ADAPT_HORIZON = 1000
RESTART_ETA = 0.999

# Datasets
DEFAULT_SEED = 0
DEFAULT_NOISE_SIGMA = 20.0
SIGNAL_TARGET_PSNR = 37.8
SIGNAL_LENGTH = 100
SIGNAL_SEGMENTS = 5
IMAGE_SHAPE = (64, 64)
PHASE_SHAPE = (600, 50)
NUM_OCTANARY_MASKS = 21
PHASE_NOISE_STD = 1.0
EIG_SIZE = 20

# Benchmark output
DEFAULT_TAU_GRID = tuple(float(t) for t in np.logspace(-3, 3, 25))
RECORD_SCHEMA_VERSION = 1
