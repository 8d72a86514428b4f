"""
config.py

Centralized configuration for the quantum certification lab.
All file paths, tolerances, dimension caps and protocol constants are defined here.
"""

import os
from pathlib import Path

from src.errors import ConfigError

# =========================
# BASE DIRECTORIES
# =========================

# Project root directory
BASE_DIR = Path(__file__).parent.parent

# Main directories
REPORTS_DIR = BASE_DIR / "reports"
PROFILES_DIR = BASE_DIR / "profiles"

# =========================
# REPORT PATHS
# =========================

RUNS_DIR = REPORTS_DIR / "runs"
VERIFY_DIR = REPORTS_DIR / "verify"
SCENARIOS_DIR = REPORTS_DIR / "chi2"

# =========================
# NUMERICAL TOLERANCES
# =========================

ATOL = 1e-10  # Exact identities (hermiticity, trace, idempotence)
ORACLE_ATOL = 1e-8  # Closed form vs oracle, Frobenius
SUPPORT_ATOL = 1e-8  # Symmetric-subspace support check
POVM_ATOL = 1e-9  # POVM completeness and channel spectra
EIG_CLAMP = 1e-12  # Eigenvalues below this are treated as zero
MC_SIGMAS = 4.0  # Width of Monte Carlo gates, in standard errors
LAW_TRIALS = 10_000  # Sampled statistics per law comparison
OPERATING_TRIALS = 200  # Trials per arm at an operating point

# =========================
# DIMENSION CAPS
# =========================

DEFAULT_DIM_CAP = 1024  # d^t for projectors and conditional states
DEFAULT_ORACLE_DIM_CAP = 4096  # D^(n+k) for the Haar moment oracle
DIM_CAP_ENV = "QCERTLAB_DIM_CAP"
MAX_PERMUTATION_T = 8  # Largest t for explicit sums over S_t

# =========================
# CHI-SQUARE LAB BUDGETS
# =========================

CHI2_MAX_ELL = 12  # Rademacher signs enumerated exhaustively
CHI2_MAX_ROUNDS = 3  # Measurement rounds in a schedule
CHI2_MAX_OUTCOMES = 16  # Outcomes per rank-one POVM
CHI2_PARTITIONS = 4  # Index-range partitions for enumeration
HARD_INSTANCE_C = 2.0  # Scale constant of the hard-instance perturbation

# =========================
# SAMPLER LIMITS
# =========================

HAYASHI_BATCH = 256  # Haar proposals drawn per vectorized round
HAYASHI_MAX_PROPOSALS = 2_000_000  # Rejection sampler gives up beyond this

# =========================
# TESTER DEFAULTS
# =========================

CONFIDENCE_REPS = 3  # Majority vote repetitions for mixedness
MAX_ERROR_RATE = 1.0 / 3.0  # Per-arm error budget of an operating point
FAR_FACTOR = 4.0 / 3.0  # Distance of planted alternatives, in units of eps
CERTIFY_DELTA = 1.0 / 3.0  # Overall failure budget of certify

# Default calibration profile. Constants multiply the copy-complexity
# shape of each protocol; entries pin batch counts found by calibrate().
DEFAULT_PROFILE = {
    "name": "default",
    "constants": {
        "mixedness": 10.0,
        "purity": 6.0,
        "closeness-unif": 16.0,
        "closeness-tcopy": 10.0,
        "bow": 40.0,
        "certify-hs": 16.0,
        "certify-repetitions": 1.0,
        "certify-precheck": 8.0,
        "certify-tail": 40.0,
        "certify-diag-radius": 0.5,
        "certify-pair-radius": 0.5,
    },
    "entries": [],
}

# =========================
# LOGGING
# =========================

LOG_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"
LOG_DATEFMT = "%H:%M:%S"

# =========================
# HELPER FUNCTIONS
# =========================

def _env_cap_factor() -> float:
    raw = os.environ.get(DIM_CAP_ENV)
    if raw is None or raw.strip() == "":
        return 1.0
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{DIM_CAP_ENV} must be a positive integer, got {raw!r}") from exc
    if value <= 0:
        raise ConfigError(f"{DIM_CAP_ENV} must be a positive integer, got {raw!r}")
    return value / DEFAULT_DIM_CAP


def dim_cap() -> int:
    """Return the cap on d^t, honouring QCERTLAB_DIM_CAP."""
    return int(round(DEFAULT_DIM_CAP * _env_cap_factor()))


def oracle_dim_cap() -> int:
    """Return the cap on D^(n+k) for the moment oracle (scales with dim_cap)."""
    return int(round(DEFAULT_ORACLE_DIM_CAP * _env_cap_factor()))


def ensure_directories():
    """Create all required directories if they don't exist."""
    directories = [
        REPORTS_DIR,
        RUNS_DIR,
        VERIFY_DIR,
        SCENARIOS_DIR,
        PROFILES_DIR,
    ]

    for directory in directories:
        directory.mkdir(parents=True, exist_ok=True)


def get_path_string(path: Path) -> str:
    """Report path as printed by the CLI."""
    return str(path)
