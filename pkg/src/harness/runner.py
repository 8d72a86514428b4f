"""
runner.py

Runs an experiment: fans trials out over joblib workers, aggregates each
arm, and writes the CSV trial table plus its JSON mirror.
"""

# =========================
# IMPORTS
# =========================

import json
import logging
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.config import CERTIFY_DELTA, CHI2_MAX_OUTCOMES, MAX_ERROR_RATE, RUNS_DIR
from src.errors import ConfigError, ResourceLimit
from src.chi2lab.divergence import run_scenario
from src.estimators.sources import PtswSource, UniformPovmSource
from src.harness.experiment import (
    CSV_COLUMNS,
    ExperimentConfig,
    TrialReport,
    batch_count,
    far_from_mixed,
    hs_far_pair,
    load_profile,
    run_trial,
)
from src.harness.seeding import trial_rng, trial_seed
from src.harness.verify import MOMENT_ATOL, moment_gaps
from src.qcore.states import maximally_mixed, random_density
from src.testers.bow import BowBatchDistribution
from src.testers.collision import hs_statistic_moments, purity_statistic_moments

logger = logging.getLogger(__name__)

BOUND_ATOL = 1e-12
# certify spends delta/6 on bucket mass checks and delta/6 on pair mass checks
PRECHECK_BUDGET = CERTIFY_DELTA / 3.0


@dataclass
class RunResult:
    config: ExperimentConfig
    trials: list
    summary: dict
    csv_path: Path | None = None
    json_path: Path | None = None

    @property
    def passed(self) -> bool:
        return all(arm["passed"] for arm in self.summary["arms"].values())


# =========================
# ORACLE PROTOCOLS
# =========================

def moment_trial(config: ExperimentConfig, trial_id: int) -> TrialReport:
    """One random instance of the moment identities at local dimension d and n = t copies."""
    label = f"{config.protocol}/oracle"
    started = time.perf_counter()
    gaps = moment_gaps(config.d, config.t, trial_rng(config.seed, trial_id, label))
    statistic = max(gaps.values())
    return TrialReport(
        trial_id=trial_id,
        protocol=config.protocol,
        d=config.d,
        t=config.t,
        eps=config.eps,
        n_batches=config.t,
        copies_used=0,
        statistic=statistic,
        threshold=MOMENT_ATOL,
        verdict="accept" if statistic <= MOMENT_ATOL else "reject",
        seed=trial_seed(config.seed, trial_id, label),
        arm="oracle",
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        details=gaps,
    )


def chi2_trial(config: ExperimentConfig, trial_id: int) -> TrialReport:
    """chi^2 against its Ingster-Suslina bound on a scenario file or a random schedule."""
    label = f"{config.protocol}/bound"
    seed = trial_seed(config.seed, trial_id, label)
    started = time.perf_counter()
    if config.scenario is not None:
        with open(config.scenario, "r") as f:
            scenario = json.load(f)
        scenario.setdefault("seed", seed)
    else:
        scenario = {
            "d": config.d,
            "t": config.t,
            "n": 1 if config.n is None else config.n,
            "ell": min(3, config.d * config.d - 1),
            "eps": config.eps,
            "basis": "gellmann",
            "schedule": f"random:{min(2 * config.d ** config.t, CHI2_MAX_OUTCOMES)}",
            "seed": seed,
        }
    result = run_scenario(scenario)
    statistic, bound = result["chi2_exact"], result["is_bound"]
    return TrialReport(
        trial_id=trial_id,
        protocol=config.protocol,
        d=int(scenario["d"]),
        t=int(scenario["t"]),
        eps=float(scenario["eps"]),
        n_batches=int(scenario["n"]),
        copies_used=int(scenario["n"]) * int(scenario["t"]),
        statistic=statistic,
        threshold=bound,
        verdict="accept" if statistic <= bound + BOUND_ATOL else "reject",
        seed=seed,
        arm="bound",
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        details={"per_term_breakdown": result["per_term_breakdown"], "scenario": scenario},
    )


# =========================
# EXACT MODE
# =========================

def exact_arm(config: ExperimentConfig, arm: str, n: int) -> dict:
    """Analytic mean and variance of the test statistic on one arm."""
    d, t, eps = config.d, config.t, config.eps
    if config.protocol == "mixedness":
        rho = np.asarray(maximally_mixed(d)) if arm == "null" else far_from_mixed(d, eps)
        mean, variance = purity_statistic_moments(PtswSource(rho, min(t, d * d)), n)
        mean -= 1.0 / d
        threshold = eps ** 2 / (2.0 * d)
    elif config.protocol == "purity":
        rho = random_density(d, d, trial_rng(config.seed, 0, f"{config.protocol}/{arm}"))
        mean, variance = purity_statistic_moments(PtswSource(rho, t), n)
        # error when |X - p| > eps p
        center = float(np.real(np.trace(np.asarray(rho) @ np.asarray(rho))))
        bound = min(1.0, (variance + (mean - center) ** 2) / (eps * center) ** 2)
        return _exact_summary(arm, n, mean, variance, eps * center, bound, bound <= MAX_ERROR_RATE)
    elif config.protocol in ("closeness-unif", "closeness-tcopy"):
        far, sigma = hs_far_pair(d, eps)
        rho = sigma if arm == "null" else far
        if config.protocol == "closeness-unif":
            mean, variance = hs_statistic_moments(UniformPovmSource(rho), UniformPovmSource(sigma), n)
            threshold = eps ** 2 / (2.0 * (d + 1) ** 2)
        else:
            mean, variance = hs_statistic_moments(PtswSource(rho, t), PtswSource(sigma, t), n)
            threshold = eps ** 2 / 2.0
    elif config.protocol == "bow":
        far, sigma = hs_far_pair(d, eps)
        law = BowBatchDistribution(sigma if arm == "null" else far, sigma, t)
        mean, variance = law.mean(), law.variance() / n
        threshold = 0.75 * eps ** 2
    else:
        raise ConfigError(f"protocol {config.protocol!r} has no exact arm summary")
    margin = threshold - mean if arm == "null" else mean - threshold
    correct_side = margin > 0
    bound = min(1.0, variance / margin ** 2) if correct_side else 1.0
    return _exact_summary(arm, n, mean, variance, threshold, bound, correct_side)


def _exact_summary(arm, n, mean, variance, threshold, bound, passed) -> dict:
    return {
        "arm": arm,
        "mode": "exact",
        "n_batches": int(n),
        "mean": float(mean),
        "variance": float(variance),
        "threshold": float(threshold),
        "chebyshev_error_bound": float(bound),
        "passed": bool(passed),
    }


# =========================
# AGGREGATION
# =========================

def summarize_arm(frame: pd.DataFrame, errors: pd.Series, protocol: str) -> dict:
    """Error rate, mean and variance of the statistic, each with a standard error."""
    count = len(frame)
    rate = float(errors.mean())
    stat = frame["statistic"].astype(float)
    variance = float(stat.var(ddof=1)) if count > 1 else 0.0
    summary = {
        "arm": str(frame["arm"].iloc[0]),
        "mode": "mc",
        "trials": count,
        "errors": int(errors.sum()),
        "error_rate": rate,
        "error_stderr": math.sqrt(rate * (1.0 - rate) / count),
        "mean": float(stat.mean()),
        "mean_stderr": math.sqrt(variance / count),
        "variance": variance,
        "variance_stderr": variance * math.sqrt(2.0 / (count - 1)) if count > 1 else 0.0,
        "mean_copies": float(frame["copies_used"].mean()),
        "passed": rate <= MAX_ERROR_RATE,
    }
    if protocol == "certify" and summary["arm"] == "null":
        # rho == sigma, so pre-checks may fail only within their share of delta
        failed = frame["details"].map(lambda details: bool(details.get("precheck_failures")))
        summary["precheck_failure_rate"] = float(failed.mean())
        summary["calibration_failure"] = summary["precheck_failure_rate"] > PRECHECK_BUDGET
        if summary["calibration_failure"]:
            logger.warning(
                "certify pre-checks failed in %.1f%% of rho == sigma trials, above the %.1f%% budget",
                100.0 * summary["precheck_failure_rate"], 100.0 * PRECHECK_BUDGET,
            )
    return summary


def summarize(trials: list, protocol: str) -> dict:
    frame = pd.DataFrame([asdict(r) for r in trials])
    errors = pd.Series([r.error for r in trials], index=frame.index)
    return {
        arm: summarize_arm(group, errors.loc[group.index], protocol)
        for arm, group in frame.groupby("arm", sort=False)
    }


# =========================
# OUTPUT
# =========================

def trials_frame(trials: list) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in trials], columns=CSV_COLUMNS)


def default_output(config: ExperimentConfig) -> Path:
    name = f"{config.protocol}_d{config.d}_t{config.t}_eps{config.eps:g}_seed{config.seed}_{config.mode}.csv"
    return RUNS_DIR / name


def write_reports(result: RunResult, path: Path):
    """CSV trial table (CRLF, fixed column order) plus the JSON mirror next to it."""
    path.parent.mkdir(parents=True, exist_ok=True)
    trials_frame(result.trials).to_csv(path, index=False, lineterminator="\r\n")
    json_path = path.with_suffix(".json")
    with open(json_path, "w") as f:
        json.dump(
            {"config": result.config.to_dict(), "summary": result.summary, "trials": [asdict(r) for r in result.trials]},
            f,
            indent=4,
            default=_jsonable,
        )
    result.csv_path, result.json_path = path, json_path
    logger.info("Reports written to %s and %s", path, json_path)


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


# =========================
# RUN
# =========================

def _execute(config: ExperimentConfig, n, profile: dict) -> tuple:
    if config.protocol == "verify-moments":
        jobs = [delayed(moment_trial)(config, i) for i in range(config.trials)]
    elif config.protocol == "chi2":
        count = 1 if config.scenario is not None else config.trials
        jobs = [delayed(chi2_trial)(config, i) for i in range(count)]
    elif config.mode == "exact":
        arms = {arm: exact_arm(config, arm, n) for arm in config.arms}
        return [], arms
    else:
        jobs = [delayed(run_trial)(config, arm, i, n, profile) for arm in config.arms for i in range(config.trials)]
    trials = Parallel(n_jobs=config.n_jobs)(jobs)
    return trials, summarize(trials, config.protocol)


def run(config: ExperimentConfig, profile: dict | None = None, write: bool = True) -> RunResult:
    """Execute every trial of config and aggregate per arm."""
    profile = load_profile(config.profile) if profile is None else profile
    n = batch_count(config, profile)
    logger.info(
        "Running %s d=%d t=%d eps=%g n=%s trials=%d mode=%s arms=%s",
        config.protocol, config.d, config.t, config.eps, n, config.trials, config.mode, ",".join(config.arms),
    )
    started = time.perf_counter()
    try:
        trials, arms = _execute(config, n, profile)
    except ResourceLimit as exc:
        raise ResourceLimit(exc.what, exc.size, exc.cap, f"d={config.d}, t={config.t}") from exc
    summary = {
        "protocol": config.protocol,
        "n_batches": n,
        "profile": profile.get("name", config.profile),
        "seconds": round(time.perf_counter() - started, 3),
        "arms": arms,
    }
    result = RunResult(config=config, trials=trials, summary=summary)
    if write:
        write_reports(result, Path(config.out) if config.out else default_output(config))
    return result
