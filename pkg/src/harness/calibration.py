"""
calibration.py

Finds the smallest batch count n that reaches a target success
probability on every arm of a grid point, and stores the results as a
named calibration profile.

Search is geometric (doubling) until the target is met, then binary
between the last failing and the first passing n. Every attempt reuses the
same master seed, so neighbouring n values see common random numbers.
"""

import json
import logging
from pathlib import Path

from src.config import PROFILES_DIR
from src.errors import CalibrationFailure, ConfigError
from src.harness.experiment import CALIBRATED_PROTOCOLS, ExperimentConfig, load_profile, save_profile
from src.harness.runner import run

logger = logging.getLogger(__name__)

DEFAULT_MAX_N = 4096


def load_grid(path) -> list:
    """Grid file: a JSON list of {protocol, d, t, eps}, or {"points": [...]}."""
    with open(path, "r") as f:
        grid = json.load(f)
    points = grid["points"] if isinstance(grid, dict) else grid
    if not points:
        raise ConfigError(f"calibration grid {path} is empty")
    return points


def success_probability(point: dict, n: int, trials: int, seed: int, n_jobs: int, profile: dict) -> float:
    """Smallest per-arm success rate at batch count n."""
    config = ExperimentConfig(
        protocol=point["protocol"],
        d=int(point["d"]),
        t=int(point["t"]),
        eps=float(point["eps"]),
        n=n,
        trials=trials,
        seed=seed,
        n_jobs=n_jobs,
    )
    result = run(config, profile=profile, write=False)
    return min(1.0 - arm["error_rate"] for arm in result.summary["arms"].values())


def calibrate_point(point: dict, target: float, trials: int, max_n: int, seed: int, n_jobs: int, profile: dict) -> dict:
    if point.get("protocol") not in CALIBRATED_PROTOCOLS:
        raise ConfigError(
            f"protocol {point.get('protocol')!r} is not calibrated by batch count; "
            f"expected one of {', '.join(sorted(CALIBRATED_PROTOCOLS))}"
        )
    successes = {}

    def reaches(n):
        successes[n] = success_probability(point, n, trials, seed, n_jobs, profile)
        logger.info("  %s d=%s t=%s eps=%s n=%d: success %.3f", point["protocol"], point["d"], point["t"], point["eps"], n, successes[n])
        return successes[n] >= target

    # bow accepts a single batch; the collision statistics need two
    low, high = 0, 1 if point["protocol"] == "bow" else 2
    while not reaches(high):
        low = high
        high *= 2
        if high > max_n:
            raise CalibrationFailure(
                f"target {target:.3f} not reached for {point} within n <= {max_n}",
                diagnostics={"point": point, "target": target, "successes": {str(k): v for k, v in sorted(successes.items())}},
            )
    while high - low > 1 and low > 0:
        mid = (low + high) // 2
        if reaches(mid):
            high = mid
        else:
            low = mid
    return {**point, "n": int(high), "success": successes[high], "trials": trials}


def calibrate(
    grid,
    target: float,
    profile_name: str = "calibrated",
    trials: int = 200,
    max_n: int = DEFAULT_MAX_N,
    seed: int = 0,
    n_jobs: int = 1,
    base_profile: str = "default",
    directory: Path = PROFILES_DIR,
) -> dict:
    """Calibrate every grid point and persist the profile; returns the profile."""
    if not 0.0 < target:
        raise ConfigError(f"target success probability must be positive, got {target}")
    if target >= 1.0:
        raise CalibrationFailure(
            f"target {target} is unreachable with finitely many trials",
            diagnostics={"target": target},
        )
    points = load_grid(grid) if isinstance(grid, (str, Path)) else list(grid)
    profile = load_profile(base_profile)
    entries = []
    for point in points:
        logger.info("Calibrating %s", point)
        entries.append(calibrate_point(point, target, trials, max_n, seed, n_jobs, profile))
    calibrated = {"name": profile_name, "constants": profile["constants"], "target": target, "entries": entries}
    path = save_profile(calibrated, directory)
    logger.info("Saved calibration profile %s to %s", profile_name, path)
    return calibrated
