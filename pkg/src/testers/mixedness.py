"""
mixedness.py

Testers built on the collision statistics:

- mixedness_test: rho = I/d versus ||rho - I/d||_1 >= eps with t-copy PTSW estimates
- closeness_test_uniform: ||rho - sigma||_2 small versus >= eps with one-copy uniform POVMs
- closeness_test_tcopy: the same question with t-copy PTSW estimates
- purity_test: multiplicative-error purity estimation

Batch-count helpers encode the copy-complexity shape of each protocol;
their constants come from the calibration profile.
"""

import logging
import math

import numpy as np

from src.config import CONFIDENCE_REPS, DEFAULT_PROFILE
from src.errors import InvalidParameter
from src.estimators.sources import EstimatorSource, PtswSource, UniformPovmSource
from src.qcore.operators import purity
from src.qcore.states import as_matrix
from src.testers.collision import TesterVerdict, hs_distance_estimate, purity_estimate

logger = logging.getLogger(__name__)


def _constant(name: str, constant: float | None) -> float:
    return float(DEFAULT_PROFILE["constants"][name] if constant is None else constant)


def _check_eps(eps: float, upper: float = 2.0):
    if not 0 < eps <= upper:
        raise InvalidParameter(f"eps must lie in (0, {upper}], got {eps}")


# =========================
# BATCH COUNTS
# =========================

def mixedness_batches(d: int, t: int, eps: float, constant: float | None = None) -> int:
    copies = _constant("mixedness", constant) * max(d * d / (math.sqrt(t) * eps ** 2), d / eps ** 2)
    return max(2, math.ceil(copies / t))


def purity_batches(d: int, t: int, eps: float, constant: float | None = None) -> int:
    shape = max(
        d * d / (math.sqrt(t) * eps),
        d / (math.sqrt(t) * eps ** 2),
        d / eps,
        math.sqrt(d) / eps ** 2,
    )
    return max(2, math.ceil(_constant("purity", constant) * shape / t))


def closeness_uniform_batches(d: int, eps_hs: float, constant: float | None = None) -> int:
    return max(2, math.ceil(_constant("closeness-unif", constant) * d / eps_hs ** 2))


def closeness_tcopy_batches(d: int, t: int, eps_hs: float, constant: float | None = None) -> int:
    shape = max(1.0 / eps_hs ** 2, d / (math.sqrt(t) * eps_hs ** 2), math.sqrt(d) / eps_hs)
    return max(2, math.ceil(_constant("closeness-tcopy", constant) * shape / t))


# =========================
# MIXEDNESS
# =========================

def mixedness_test(
    rho,
    eps: float,
    t: int,
    rng: np.random.Generator,
    confidence_reps: int = CONFIDENCE_REPS,
    n: int | None = None,
    constant: float | None = None,
) -> TesterVerdict:
    """Majority vote of centered purity tests against eps^2 / (2d)."""
    _check_eps(eps)
    if t < 1:
        raise InvalidParameter(f"t must be >= 1, got {t}")
    if confidence_reps < 1:
        raise InvalidParameter(f"confidence_reps must be >= 1, got {confidence_reps}")
    matrix = as_matrix(rho)
    d = matrix.shape[0]
    t_used = min(int(t), d * d)
    if t_used != t:
        logger.info("Clamping t=%d to d^2=%d for mixedness testing", t, t_used)
    n = mixedness_batches(d, t_used, eps, constant) if n is None else int(n)
    eps_hs = eps / math.sqrt(d)
    threshold = eps_hs ** 2 / 2.0
    source = PtswSource(matrix, t_used)
    raw, centered = [], []
    copies = 0
    for _ in range(confidence_reps):
        report = purity_estimate(source, n, rng)
        raw.append(report.statistic)
        centered.append(report.statistic - 1.0 / d)
        copies += report.copies_used
    votes = sum(1 for value in centered if value < threshold)
    return TesterVerdict(
        accept=votes * 2 > confidence_reps,
        statistic=float(np.median(centered)),
        threshold=threshold,
        copies_used=copies,
        n_batches=n * confidence_reps,
        t=t_used,
        details={
            "raw_purity": raw,
            "centered": centered,
            "accept_votes": votes,
            "t_requested": int(t),
            "acceptance_rate": source.stats.rate,
        },
    )


# =========================
# CLOSENESS
# =========================

def _as_source(value, factory) -> EstimatorSource:
    return value if isinstance(value, EstimatorSource) else factory(value)


def closeness_test_uniform(rho_source, sigma_source, eps_hs: float, n: int, rng: np.random.Generator) -> TesterVerdict:
    """One-copy uniform-POVM tester; thresholds the biased statistic at eps^2 / (2 (d+1)^2)."""
    if eps_hs <= 0:
        raise InvalidParameter(f"eps_hs must be > 0, got {eps_hs}")
    rho_src = _as_source(rho_source, UniformPovmSource)
    sigma_src = _as_source(sigma_source, UniformPovmSource)
    d = rho_src.dim
    threshold = eps_hs ** 2 / (2.0 * (d + 1) ** 2)
    report = hs_distance_estimate(rho_src, sigma_src, n, rng)
    return TesterVerdict(
        accept=report.statistic < threshold,
        statistic=report.statistic,
        threshold=threshold,
        copies_used=report.copies_used,
        n_batches=n,
        t=1,
        details=report.details,
    )


def closeness_test_tcopy(rho, sigma, eps_hs: float, t: int, n: int, rng: np.random.Generator) -> TesterVerdict:
    """PTSW estimates of both states; thresholds the unbiased statistic at eps^2 / 2."""
    if eps_hs <= 0:
        raise InvalidParameter(f"eps_hs must be > 0, got {eps_hs}")
    rho_src = _as_source(rho, lambda state: PtswSource(state, t))
    sigma_src = _as_source(sigma, lambda state: PtswSource(state, t))
    threshold = eps_hs ** 2 / 2.0
    report = hs_distance_estimate(rho_src, sigma_src, n, rng)
    return TesterVerdict(
        accept=report.statistic < threshold,
        statistic=report.statistic,
        threshold=threshold,
        copies_used=report.copies_used,
        n_batches=n,
        t=int(t),
        details=report.details,
    )


# =========================
# PURITY
# =========================

def purity_test(rho, eps_rel: float, t: int, n: int | None, rng: np.random.Generator, constant: float | None = None) -> TesterVerdict:
    """Estimate tr(rho^2); accepts when the relative error is at most eps_rel."""
    _check_eps(eps_rel, upper=1.0)
    matrix = as_matrix(rho)
    d = matrix.shape[0]
    n = purity_batches(d, t, eps_rel, constant) if n is None else int(n)
    report = purity_estimate(PtswSource(matrix, t), n, rng)
    true_purity = purity(matrix)
    relative = abs(report.statistic / true_purity - 1.0)
    return TesterVerdict(
        accept=relative <= eps_rel,
        statistic=relative,
        threshold=eps_rel,
        copies_used=report.copies_used,
        n_batches=n,
        t=int(t),
        details={"estimate": report.statistic, "purity": true_purity},
    )
