"""
collision.py

Collision statistics over independent estimates:

    purity:           X = (1 / C(n,2)) sum_{i<j} tr(rho_hat_i rho_hat_j)
    Hilbert-Schmidt:  X = (1 / C(n,2)) sum_{i<j} tr(Delta_hat_i Delta_hat_j),  Delta_hat = rho_hat - sigma_hat

plus their exact mean and variance from the first two moments of the
estimate (order-2 U-statistic variance), and Chebyshev batch sizing.
"""

from dataclasses import dataclass, field

import numpy as np

from src.errors import InvalidParameter, ShapeError
from src.estimators.sources import EstimatorSource


# =========================
# REPORT TYPES
# =========================

@dataclass(frozen=True)
class TesterVerdict:
    """Decision of a tester with the statistic and copy accounting behind it."""

    accept: bool
    statistic: float
    threshold: float
    copies_used: int
    n_batches: int
    t: int
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "accept" if self.accept else "reject"


@dataclass(frozen=True)
class CollisionReport:
    """Value of a collision statistic and what it cost."""

    statistic: float
    n_batches: int
    copies_used: int
    t: int
    details: dict = field(default_factory=dict)


# =========================
# STATISTICS
# =========================

def collision_statistic(estimates) -> float:
    """Mean of tr(A_i A_j) over pairs i < j, from the sum trick."""
    stack = np.asarray(estimates)
    n = stack.shape[0]
    if n < 2:
        raise InvalidParameter(f"need at least 2 estimates, got {n}")
    total = stack.sum(axis=0)
    pair_sum = np.real(np.vdot(total.conj().T, total)) - np.real(np.einsum("kij,kji->", stack, stack))
    return float(pair_sum / (n * (n - 1)))


def purity_estimate(source: EstimatorSource, n: int, rng: np.random.Generator) -> CollisionReport:
    """Collision estimate of tr(E[rho_hat]^2) from n independent estimates."""
    if n < 2:
        raise InvalidParameter(f"purity estimation needs n >= 2 batches, got {n}")
    outputs = source.sample_many(n, rng)
    statistic = collision_statistic([out.estimate.entries for out in outputs])
    return CollisionReport(
        statistic=statistic,
        n_batches=n,
        copies_used=sum(out.copies_consumed for out in outputs),
        t=source.copies_per_sample,
        details={"source": source.label},
    )


def hs_distance_estimate(source_rho: EstimatorSource, source_sigma: EstimatorSource, n: int, rng: np.random.Generator) -> CollisionReport:
    """Collision estimate of tr(E[rho_hat - sigma_hat]^2)."""
    if source_rho.dim != source_sigma.dim:
        raise ShapeError(f"sources act on different dimensions: {source_rho.dim} vs {source_sigma.dim}")
    if n < 2:
        raise InvalidParameter(f"Hilbert-Schmidt estimation needs n >= 2 batches, got {n}")
    rho_out = source_rho.sample_many(n, rng)
    sigma_out = source_sigma.sample_many(n, rng)
    diffs = [a.estimate.entries - b.estimate.entries for a, b in zip(rho_out, sigma_out)]
    copies_rho = sum(out.copies_consumed for out in rho_out)
    copies_sigma = sum(out.copies_consumed for out in sigma_out)
    return CollisionReport(
        statistic=collision_statistic(diffs),
        n_batches=n,
        copies_used=copies_rho + copies_sigma,
        t=source_rho.copies_per_sample,
        details={"copies_rho": copies_rho, "copies_sigma": copies_sigma, "source": source_rho.label},
    )


# =========================
# EXACT MOMENTS
# =========================

def collision_mean(mean: np.ndarray) -> float:
    return float(np.real(np.vdot(mean.conj().T, mean)))


def collision_variance(mean: np.ndarray, second: np.ndarray, n: int) -> float:
    """Var of the pair-averaged statistic with first moment mean and second moment second."""
    expected = collision_mean(mean)
    zeta_one = float(np.real(np.trace(second @ np.kron(mean, mean)))) - expected ** 2
    zeta_two = float(np.real(np.trace(second @ second))) - expected ** 2
    return (4.0 * (n - 2) * zeta_one + 2.0 * zeta_two) / (n * (n - 1))


def difference_moments(source_rho: EstimatorSource, source_sigma: EstimatorSource):
    """First and second moments of rho_hat - sigma_hat for independent estimates."""
    mu_rho, mu_sigma = source_rho.exact_mean(), source_sigma.exact_mean()
    second = (
        source_rho.exact_second_moment()
        - np.kron(mu_rho, mu_sigma)
        - np.kron(mu_sigma, mu_rho)
        + source_sigma.exact_second_moment()
    )
    return mu_rho - mu_sigma, second


def purity_statistic_moments(source: EstimatorSource, n: int) -> tuple:
    mean = source.exact_mean()
    return collision_mean(mean), collision_variance(mean, source.exact_second_moment(), n)


def hs_statistic_moments(source_rho: EstimatorSource, source_sigma: EstimatorSource, n: int) -> tuple:
    mean, second = difference_moments(source_rho, source_sigma)
    return collision_mean(mean), collision_variance(mean, second, n)


def chebyshev_batches(source: EstimatorSource, tolerance: float, fail_prob: float, max_n: int = 1 << 20) -> int:
    """Smallest n with Var[X](n) / tolerance^2 <= fail_prob."""
    if tolerance <= 0 or not 0 < fail_prob < 1:
        raise InvalidParameter(f"need tolerance > 0 and 0 < fail_prob < 1, got {tolerance}, {fail_prob}")
    mean = source.exact_mean()
    second = source.exact_second_moment()

    def ok(n):
        return collision_variance(mean, second, n) <= fail_prob * tolerance ** 2

    high = 2
    while not ok(high):
        high *= 2
        if high > max_n:
            raise InvalidParameter(f"no batch count up to {max_n} meets the tolerance")
    low = max(2, high // 2)
    while low < high:
        mid = (low + high) // 2
        if ok(mid):
            high = mid
        else:
            low = mid + 1
    return high
