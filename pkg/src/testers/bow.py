"""
bow.py

Batched closeness tester from t copies of rho and t copies of sigma per batch.

Each batch measures three commuting transposition class sums on the 2t
registers: C_rho (pairs inside the rho copies), C_sigma (pairs inside the
sigma copies) and C_all (all pairs). Their expectations are
C(t,2) tr(rho^2), C(t,2) tr(sigma^2) and the same plus t^2 tr(rho sigma), so

    z = (C_rho + C_sigma) / C(t,2) - (2 / t^2) (C_all - C_rho - C_sigma)

is unbiased for ||rho - sigma||_2^2. C_rho and C_sigma are content sums of
the weak Schur labels; C_all = (Casimir - 2 t d) / 2 on the product of the
two GL(d) irreps. The outcome distribution is computed exactly, so batches
are drawn from it and the exact mean and variance come for free.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.special import comb

from src.config import DEFAULT_PROFILE, EIG_CLAMP
from src.errors import ConstructionError, InvalidParameter, ShapeError
from src.qcore.operators import kron_power
from src.qcore.states import as_matrix
from src.schurweyl.partitions import Partition, content_sum
from src.schurweyl.projectors import irrep_isometry, lie_generators, weak_schur_distribution
from src.testers.collision import TesterVerdict

logger = logging.getLogger(__name__)

INTEGER_ATOL = 1e-6


@dataclass(frozen=True)
class BowOutcome:
    lam_rho: Partition
    lam_sigma: Partition
    c_rho: int
    c_sigma: int
    c_all: int
    probability: float


def _irrep_state(rho: np.ndarray, power: np.ndarray, lam: Partition) -> np.ndarray:
    w = irrep_isometry(lam, rho.shape[0])
    block = w.conj().T @ power @ w
    return block / np.real(np.trace(block))


def _casimir(gen_a: np.ndarray, gen_b: np.ndarray) -> np.ndarray:
    """sum_ab E_ab E_ba for the tensor product of two GL(d) representations."""
    d = gen_a.shape[0]
    eye_a = np.eye(gen_a.shape[2])
    eye_b = np.eye(gen_b.shape[2])
    total = np.zeros((gen_a.shape[2] * gen_b.shape[2],) * 2, dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            e_ab = np.kron(gen_a[a, b], eye_b) + np.kron(eye_a, gen_b[a, b])
            e_ba = np.kron(gen_a[b, a], eye_b) + np.kron(eye_a, gen_b[b, a])
            total += e_ab @ e_ba
    return (total + total.conj().T) / 2.0


def joint_outcomes(rho, sigma, t: int) -> list:
    """Exact distribution of (lam_rho, lam_sigma, C_all) on rho^{tensor t} tensor sigma^{tensor t}."""
    rho_m, sigma_m = np.asarray(as_matrix(rho)), np.asarray(as_matrix(sigma))
    if rho_m.shape != sigma_m.shape:
        raise ShapeError(f"states have different shapes: {rho_m.shape} vs {sigma_m.shape}")
    if t < 1:
        raise InvalidParameter(f"t must be >= 1, got {t}")
    d = rho_m.shape[0]
    dist_rho = {lam: p for lam, p in weak_schur_distribution(rho_m, t).items() if p > EIG_CLAMP}
    dist_sigma = {lam: p for lam, p in weak_schur_distribution(sigma_m, t).items() if p > EIG_CLAMP}
    power_rho, power_sigma = kron_power(rho_m, t), kron_power(sigma_m, t)
    generators = {lam: lie_generators(lam, d) for lam in set(dist_rho) | set(dist_sigma)}
    outcomes = []
    for lam, p_lam in dist_rho.items():
        q_rho = _irrep_state(rho_m, power_rho, lam)
        for mu, p_mu in dist_sigma.items():
            joint = np.kron(q_rho, _irrep_state(sigma_m, power_sigma, mu))
            eigs, vecs = eigh(_casimir(generators[lam], generators[mu]))
            values = (eigs - 2 * t * d) / 2.0
            rounded = np.rint(values)
            if np.max(np.abs(values - rounded)) > INTEGER_ATOL:
                raise ConstructionError(f"Casimir spectrum for {lam} x {mu} is not integral")
            weights = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), joint, vecs))
            for c_all in np.unique(rounded):
                mass = float(weights[rounded == c_all].sum())
                if mass > EIG_CLAMP:
                    outcomes.append(
                        BowOutcome(lam, mu, content_sum(lam), content_sum(mu), int(c_all), p_lam * p_mu * mass)
                    )
    total = sum(o.probability for o in outcomes)
    return [
        BowOutcome(o.lam_rho, o.lam_sigma, o.c_rho, o.c_sigma, o.c_all, o.probability / total) for o in outcomes
    ]


# =========================
# SWAP TEST
# =========================

def swap_test_probability(rho, sigma) -> float:
    """Pr[+1] of the two-copy SWAP measurement on rho tensor sigma (the t = 1 cross term)."""
    return float(sum(o.probability for o in joint_outcomes(rho, sigma, 1) if o.c_all == 1))


def swap_test(rho, sigma, rng: np.random.Generator) -> int:
    return 1 if rng.random() < swap_test_probability(rho, sigma) else -1


# =========================
# BATCHED ESTIMATOR
# =========================

class BowBatchDistribution:
    """Exact law of the per-batch estimate z for fixed (rho, sigma, t)."""

    def __init__(self, rho, sigma, t: int):
        if t < 2:
            raise InvalidParameter(f"batched closeness testing needs t >= 2, got {t}")
        self.t = int(t)
        self.d = np.asarray(as_matrix(rho)).shape[0]
        self.outcomes = joint_outcomes(rho, sigma, self.t)
        pairs = comb(self.t, 2, exact=True)
        self.values = np.array(
            [
                (o.c_rho + o.c_sigma) / pairs - 2.0 / self.t ** 2 * (o.c_all - o.c_rho - o.c_sigma)
                for o in self.outcomes
            ]
        )
        self.probabilities = np.array([o.probability for o in self.outcomes])
        logger.debug("BOW batch law d=%d t=%d with %d outcomes", self.d, self.t, len(self.outcomes))

    def mean(self) -> float:
        return float(self.probabilities @ self.values)

    def variance(self) -> float:
        return float(self.probabilities @ (self.values - self.mean()) ** 2)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return self.values[rng.choice(self.values.size, size=size, p=self.probabilities)]


def bow_batches(t: int, eps_hs: float, constant: float | None = None) -> int:
    constant = DEFAULT_PROFILE["constants"]["bow"] if constant is None else constant
    return max(1, math.ceil(constant * (1.0 / t ** 2 + eps_hs ** 2 / t) / eps_hs ** 4))


def bow_batched_test(rho_source, sigma_source, eps_hs: float, t: int, n: int | None, rng: np.random.Generator) -> TesterVerdict:
    """Accept iff the batch average of z is at most 3 eps^2 / 4."""
    if eps_hs <= 0:
        raise InvalidParameter(f"eps_hs must be > 0, got {eps_hs}")
    law = BowBatchDistribution(rho_source, sigma_source, t)
    n = bow_batches(t, eps_hs) if n is None else int(n)
    if n < 1:
        raise InvalidParameter(f"need at least one batch, got n={n}")
    batches = law.sample(n, rng)
    statistic = float(batches.mean())
    threshold = 0.75 * eps_hs ** 2
    return TesterVerdict(
        accept=statistic <= threshold,
        statistic=statistic,
        threshold=threshold,
        copies_used=2 * t * n,
        n_batches=n,
        t=int(t),
        details={
            "batch_variance": float(batches.var(ddof=1)) if n > 1 else 0.0,
            "exact_mean": law.mean(),
            "exact_batch_variance": law.variance(),
        },
    )
