"""
experiment.py

Experiment configuration, planted instances and single-trial execution.

Every protocol exposes one or more arms. A trial draws its own generator
from (master seed, trial id, protocol/arm), builds the arm's instance, runs
the tester and returns a TrialReport. An arm's error is a reject on the
null-type arms and an accept on the alt arm.
"""

# =========================
# IMPORTS
# =========================

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from src.config import CONFIDENCE_REPS, DEFAULT_PROFILE, FAR_FACTOR, PROFILES_DIR
from src.errors import ConfigError
from src.harness.seeding import trial_rng, trial_seed
from src.qcore.states import diagonal_state, maximally_mixed, random_density
from src.testers.bow import bow_batched_test, bow_batches
from src.testers.bucketing import certify
from src.testers.mixedness import (
    closeness_tcopy_batches,
    closeness_test_tcopy,
    closeness_test_uniform,
    closeness_uniform_batches,
    mixedness_batches,
    mixedness_test,
    purity_batches,
    purity_test,
)

logger = logging.getLogger(__name__)

PROTOCOLS = (
    "verify-moments",
    "purity",
    "mixedness",
    "certify",
    "closeness-unif",
    "closeness-tcopy",
    "bow",
    "chi2",
)

ARMS = {
    "verify-moments": ("oracle",),
    "purity": ("estimate",),
    "mixedness": ("null", "alt"),
    "certify": ("null", "alt"),
    "closeness-unif": ("null", "alt"),
    "closeness-tcopy": ("null", "alt"),
    "bow": ("null", "alt"),
    "chi2": ("bound",),
}

EXACT_PROTOCOLS = {"verify-moments", "purity", "mixedness", "closeness-unif", "closeness-tcopy", "bow", "chi2"}

CALIBRATED_PROTOCOLS = {"purity", "mixedness", "closeness-unif", "closeness-tcopy", "bow"}


# =========================
# CONFIGURATION
# =========================

@dataclass(frozen=True)
class ExperimentConfig:
    """One run of one protocol; validated on construction."""

    protocol: str
    d: int = 2
    t: int = 2
    eps: float = 0.6
    n: int | None = None
    trials: int = 200
    seed: int = 0
    mode: str = "mc"
    out: str | None = None
    profile: str = "default"
    arm: str = "both"
    n_jobs: int = 1
    confidence_reps: int = CONFIDENCE_REPS
    scenario: str | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; expected one of {', '.join(PROTOCOLS)}")
        for name in ("d", "t", "trials", "confidence_reps"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.n is not None and int(self.n) < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.mode not in ("mc", "exact"):
            raise ConfigError(f"mode must be 'mc' or 'exact', got {self.mode!r}")
        if self.mode == "exact" and self.protocol not in EXACT_PROTOCOLS:
            raise ConfigError(f"protocol {self.protocol!r} has no exact oracle")
        if self.arm != "both" and self.arm not in ARMS[self.protocol]:
            raise ConfigError(f"protocol {self.protocol!r} has arms {ARMS[self.protocol]}, got {self.arm!r}")
        if self.n_jobs == 0:
            raise ConfigError("n_jobs must be nonzero")

    @property
    def arms(self) -> tuple:
        return ARMS[self.protocol] if self.arm == "both" else (self.arm,)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)


@dataclass(frozen=True)
class TrialReport:
    """One CSV row, plus wall time and details for the JSON mirror."""

    trial_id: int
    protocol: str
    d: int
    t: int
    eps: float
    n_batches: int
    copies_used: int
    statistic: float
    threshold: float
    verdict: str
    seed: int
    arm: str
    wall_time_ms: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def error(self) -> bool:
        return (self.verdict == "accept") if self.arm == "alt" else (self.verdict == "reject")


CSV_COLUMNS = [
    "trial_id",
    "protocol",
    "d",
    "t",
    "eps",
    "n_batches",
    "copies_used",
    "statistic",
    "threshold",
    "verdict",
    "seed",
    "arm",
]


# =========================
# PROFILES
# =========================

def load_profile(name: str = "default") -> dict:
    """Default profile, or PROFILES_DIR/<name>.json layered over it."""
    profile = json.loads(json.dumps(DEFAULT_PROFILE))
    if name == "default" and not (PROFILES_DIR / "default.json").exists():
        return profile
    path = PROFILES_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"calibration profile {name!r} not found at {path}")
    with open(path, "r") as f:
        stored = json.load(f)
    profile["name"] = stored.get("name", name)
    profile["constants"].update(stored.get("constants", {}))
    profile["entries"] = list(stored.get("entries", []))
    return profile


def save_profile(profile: dict, directory: Path = PROFILES_DIR) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{profile['name']}.json"
    with open(path, "w") as f:
        json.dump(profile, f, indent=4)
    return path


def _matches(entry: dict, protocol: str, d: int, t: int, eps: float) -> bool:
    return (
        entry.get("protocol") == protocol
        and int(entry.get("d", -1)) == d
        and int(entry.get("t", -1)) == t
        and math.isclose(float(entry.get("eps", -1.0)), eps)
    )


def batch_count(config: ExperimentConfig, profile: dict) -> int | None:
    """Explicit n, else a calibrated entry, else the protocol's copy-complexity formula."""
    if config.n is not None:
        return int(config.n)
    for entry in profile.get("entries", []):
        if _matches(entry, config.protocol, config.d, config.t, config.eps):
            return int(entry["n"])
    constants = profile["constants"]
    d, t, eps = config.d, config.t, config.eps
    if config.protocol == "mixedness":
        return mixedness_batches(d, min(t, d * d), eps, constants["mixedness"])
    if config.protocol == "purity":
        return purity_batches(d, t, eps, constants["purity"])
    if config.protocol == "closeness-unif":
        return closeness_uniform_batches(d, eps, constants["closeness-unif"])
    if config.protocol == "closeness-tcopy":
        return closeness_tcopy_batches(d, t, eps, constants["closeness-tcopy"])
    if config.protocol == "bow":
        return bow_batches(t, eps, constants["bow"])
    return None


# =========================
# PLANTED INSTANCES
# =========================

def far_from_mixed(d: int, eps: float) -> np.ndarray:
    """Diagonal state with ||rho - I/d||_1 = FAR_FACTOR * eps (paired +-s entries)."""
    pairs = d // 2
    if pairs == 0:
        raise ConfigError("no state is far from the maximally mixed state in dimension 1")
    s = FAR_FACTOR * eps / (2 * pairs)
    if s > 1.0 / d:
        logger.warning("Planted distance %.3f exceeds what d=%d allows; clamping", FAR_FACTOR * eps, d)
        s = 1.0 / d
    diag = np.full(d, 1.0 / d)
    diag[0:2 * pairs:2] += s
    diag[1:2 * pairs:2] -= s
    return np.diag(diag).astype(np.complex128)


def hs_far_pair(d: int, eps_hs: float) -> tuple:
    """(rho, sigma) with sigma = I/d and ||rho - sigma||_2 = FAR_FACTOR * eps_hs where possible."""
    pairs = d // 2
    if pairs == 0:
        raise ConfigError("closeness testing needs d >= 2")
    s = FAR_FACTOR * eps_hs / math.sqrt(2 * pairs)
    if s > 1.0 / d:
        logger.warning("Planted HS distance %.3f exceeds what d=%d allows; clamping", FAR_FACTOR * eps_hs, d)
        s = 1.0 / d
    diag = np.full(d, 1.0 / d)
    diag[0:2 * pairs:2] += s
    diag[1:2 * pairs:2] -= s
    return np.diag(diag).astype(np.complex128), np.eye(d, dtype=np.complex128) / d


def certify_sigma(d: int) -> np.ndarray:
    """diag(1/2, 1/4, ..., 2^-(d-1), 2^-(d-1))."""
    values = [2.0 ** -(k + 1) for k in range(d - 1)] + [2.0 ** -(d - 1)]
    return np.asarray(diagonal_state(values))


def certify_alternative(sigma: np.ndarray, eps: float) -> np.ndarray:
    """Reversed spectrum of sigma, or a pure state when reversal is not far enough."""
    reversed_state = np.diag(np.diag(sigma)[::-1]).astype(np.complex128)
    if np.sum(np.abs(np.diag(reversed_state - sigma))) >= eps:
        return reversed_state
    pure = np.zeros_like(sigma)
    pure[-1, -1] = 1.0
    if np.sum(np.abs(np.diag(pure - sigma))) < eps:
        raise ConfigError(f"no planted alternative at trace distance {eps} from sigma")
    return pure


# =========================
# TRIALS
# =========================

def _report(config: ExperimentConfig, arm: str, trial_id: int, seed: int, verdict, started: float) -> TrialReport:
    return TrialReport(
        trial_id=trial_id,
        protocol=config.protocol,
        d=config.d,
        t=verdict.t,
        eps=config.eps,
        n_batches=int(verdict.n_batches),
        copies_used=int(verdict.copies_used),
        statistic=float(verdict.statistic),
        threshold=float(verdict.threshold),
        verdict=verdict.verdict,
        seed=seed,
        arm=arm,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        details=verdict.details,
    )


def run_trial(config: ExperimentConfig, arm: str, trial_id: int, n: int | None, profile: dict) -> TrialReport:
    """Run one Monte Carlo trial of config.protocol on the given arm."""
    label = f"{config.protocol}/{arm}"
    seed = trial_seed(config.seed, trial_id, label)
    rng = trial_rng(config.seed, trial_id, label)
    started = time.perf_counter()
    d, t, eps = config.d, config.t, config.eps

    if config.protocol == "mixedness":
        rho = np.asarray(maximally_mixed(d)) if arm == "null" else far_from_mixed(d, eps)
        verdict = mixedness_test(rho, eps, t, rng, config.confidence_reps, n=n)
    elif config.protocol == "purity":
        rho = random_density(d, d, rng)
        verdict = purity_test(rho, eps, t, n, rng)
    elif config.protocol in ("closeness-unif", "closeness-tcopy", "bow"):
        far, sigma = hs_far_pair(d, eps)
        rho = sigma if arm == "null" else far
        if config.protocol == "closeness-unif":
            verdict = closeness_test_uniform(rho, sigma, eps, n, rng)
        elif config.protocol == "closeness-tcopy":
            verdict = closeness_test_tcopy(rho, sigma, eps, t, n, rng)
        else:
            verdict = bow_batched_test(rho, sigma, eps, t, n, rng)
    elif config.protocol == "certify":
        sigma = certify_sigma(d)
        rho = sigma if arm == "null" else certify_alternative(sigma, eps)
        verdict = certify(sigma, rho, eps, t, rng, profile=profile)
    else:
        raise ConfigError(f"protocol {config.protocol!r} does not run Monte Carlo trials")
    return _report(config, arm, trial_id, seed, verdict, started)
