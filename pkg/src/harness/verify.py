"""
verify.py

Verification suite: every structural identity of the library, grouped by
package, run against exact oracles on small random instances.

Checks register themselves with @check(module, name). A check takes a
generator and the set of injected faults and returns (passed, detail).
"""

# =========================
# IMPORTS
# =========================

import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.config import (
    ATOL,
    FAR_FACTOR,
    LAW_TRIALS,
    MAX_ERROR_RATE,
    MC_SIGMAS,
    OPERATING_TRIALS,
    ORACLE_ATOL,
    POVM_ATOL,
    VERIFY_DIR,
)
from src.errors import ConfigError
from src.chi2lab.channels import induced_channel, lueders_channel, random_rank_one_povm
from src.chi2lab.divergence import (
    adversarial_basis,
    chi2_exact,
    ingster_suslina_bound,
    linearized_terms,
    normalization_removal_gap,
    phi_lueders,
    phi_matrix,
    projected_norm,
)
from src.chi2lab.instances import HardInstanceEnsemble
from src.estimators.povm import (
    HayashiSampler,
    gps_refined_second_moment,
    gps_truncated_second_moment,
    hayashi_first_moment,
    hayashi_second_moment,
    uniform_first_moment,
    uniform_second_moment,
)
from src.estimators.ptsw import PtswEstimator, ptsw_truncated_second_moment, tau_lambda_marginal_check
from src.estimators.purification import build_purification_channel, monte_carlo_gap, validate_purification_channel
from src.estimators.sources import FixedSource, PtswSource, UniformPovmSource
from src.harness.experiment import certify_sigma, hs_far_pair, load_profile
from src.qcore.operators import (
    gellmann_basis,
    hs_norm,
    in_sos_cone,
    kron_power,
    partial_trace,
    permutation_operator,
    purity,
    swap_operator,
    sym_dimension,
    symmetric_basis,
    symmetric_projector,
    trace_norm,
)
from src.qcore.states import random_density
from src.schurweyl.moments import haar_moment_oracle
from src.schurweyl.partitions import partitions
from src.schurweyl.projectors import expected_partition_length, projector_matrix, weak_schur_distribution
from src.testers.bow import BowBatchDistribution, swap_test_probability
from src.testers.bucketing import bucket_plan
from src.testers.collision import hs_statistic_moments, purity_statistic_moments

logger = logging.getLogger(__name__)

SCOPES = ("all", "qcore", "schurweyl", "estimators", "testers", "chi2lab")
FAULTS = ("perturbed-projector",)
MOMENT_ATOL = 1e-9
SE_FLOOR = 1e-15
CALIBRATION_TARGET = 0.8
CALIBRATION_TRIALS = 60
CALIBRATION_MAX_N = 4096


@dataclass(frozen=True)
class Check:
    module: str
    name: str
    func: object


CHECKS = []


def check(module: str, name: str):
    def register(func):
        CHECKS.append(Check(module, name, func))
        return func

    return register


def _gap(gap: float, atol: float) -> tuple:
    return gap <= atol, f"max gap {gap:.3e} (tolerance {atol:.0e})"


def random_symmetric_state(local_dim: int, n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state supported on the symmetric subspace of (C^D)^{tensor n}."""
    basis = symmetric_basis(local_dim, n)
    size = sym_dimension(local_dim, n)
    inner = np.asarray(random_density(size, size if rank is None else min(rank, size), rng))
    return basis @ inner @ basis.conj().T


def _projector(lam, d: int, faults: set, rng: np.random.Generator) -> np.ndarray:
    proj = projector_matrix(lam, d)
    if "perturbed-projector" not in faults:
        return proj
    noise = rng.standard_normal(proj.shape) * 1e-3
    return proj + (noise + noise.T) / 2.0


# =========================
# MOMENT IDENTITIES
# =========================

def moment_gaps(local_dim: int, n: int, rng: np.random.Generator) -> dict:
    """Closed-form moments against the Haar moment oracle on one random instance."""
    rho = np.asarray(random_density(local_dim, local_dim, rng))
    gaps = {
        "uniform-first": np.linalg.norm(uniform_first_moment(rho) - np.asarray(haar_moment_oracle(rho, local_dim, 1))),
        "uniform-second": np.linalg.norm(uniform_second_moment(rho) - np.asarray(haar_moment_oracle(rho, local_dim, 2))),
    }
    psi = random_symmetric_state(local_dim, n, rng)
    first = np.asarray(haar_moment_oracle(psi, local_dim, 1))
    second = np.asarray(haar_moment_oracle(psi, local_dim, 2))
    gaps["hayashi-first"] = np.linalg.norm(hayashi_first_moment(psi, local_dim) - first)
    gaps["hayashi-second"] = np.linalg.norm(hayashi_second_moment(psi, local_dim) - second)
    scale = (local_dim + n) / n
    eye = np.eye(local_dim)
    gps = scale ** 2 * second - (scale / n) * (np.kron(first, eye) + np.kron(eye, first)) + np.eye(local_dim ** 2) / n ** 2
    gaps["gps-refined-second"] = np.linalg.norm(gps_refined_second_moment(psi, local_dim) - gps)
    return {name: float(value) for name, value in gaps.items()}


# =========================
# STATISTIC LAWS
# =========================

def estimate_pool(source, size: int, rng: np.random.Generator) -> np.ndarray:
    return np.stack([out.estimate.entries for out in source.sample_many(size, rng)])


def collision_trials(pool: np.ndarray, n: int) -> np.ndarray:
    """Collision statistic of every consecutive group of n estimates in pool."""
    trials = pool.shape[0] // n
    groups = pool[: trials * n].reshape(trials, n, *pool.shape[1:])
    total = groups.sum(axis=1)
    full = np.real(np.einsum("tij,tji->t", total, total))
    diagonal = np.real(np.einsum("tkij,tkji->t", groups, groups))
    return (full - diagonal) / (n * (n - 1))


def law_gaps(values: np.ndarray, mean: float, variance: float) -> tuple:
    """Distance of the sample mean and sample variance from exact values, in standard errors."""
    count = len(values)
    centered = values - values.mean()
    mean_se = math.sqrt(max(variance, 0.0) / count)
    var_se = float(np.std(centered ** 2)) / math.sqrt(count)
    mean_gap = abs(values.mean() - mean) / max(mean_se, SE_FLOOR)
    var_gap = abs(np.var(values, ddof=1) - variance) / max(var_se, SE_FLOOR)
    return float(mean_gap), float(var_gap)


def statistic_law_gaps(rho, sigma, trials: int, rng: np.random.Generator, n_values=(4, 6, 8), t_values=(1, 2)) -> dict:
    """Worst law gap of the purity and Hilbert-Schmidt statistics per source and batch count.

    Estimate i of rho is paired with estimate i of sigma, as in hs_distance_estimate.
    """
    makers = [("uniform-povm", UniformPovmSource)]
    makers += [(f"ptsw-t{t}", lambda state, t=t: PtswSource(state, t)) for t in t_values]
    size = trials * max(n_values)
    gaps = {}
    for label, make in makers:
        source_rho, source_sigma = make(rho), make(sigma)
        pool_rho = estimate_pool(source_rho, size, rng)
        pool_sigma = estimate_pool(source_sigma, size, rng)
        for n in n_values:
            purity_gap = law_gaps(collision_trials(pool_rho, n), *purity_statistic_moments(source_rho, n))
            hs_gap = law_gaps(collision_trials(pool_rho - pool_sigma, n), *hs_statistic_moments(source_rho, source_sigma, n))
            gaps[f"{label}/purity/n={n}"] = max(purity_gap)
            gaps[f"{label}/hs/n={n}"] = max(hs_gap)
    return gaps


def bow_variance_table(t_values=(2, 4, 8), distances=(0.0, 0.5), d: int = 2) -> dict:
    """Exact per-batch variance of z and its bound, keyed by (||Delta||_2, t)."""
    table = {}
    for distance in distances:
        rho, sigma = hs_far_pair(d, distance / FAR_FACTOR)
        for t in t_values:
            law = BowBatchDistribution(rho, sigma, t)
            table[(distance, t)] = (law, 10.0 * (1.0 / t ** 2 + distance ** 2 / t))
    return table


# =========================
# QCORE
# =========================

@check("qcore", "purity-equals-swap-expectation")
def _purity_swap(rng, faults):
    worst = 0.0
    for d in (2, 3, 4):
        rho = np.asarray(random_density(d, d, rng))
        swap_value = float(np.real(np.trace(swap_operator(d) @ np.kron(rho, rho))))
        worst = max(worst, abs(purity(rho) - swap_value))
    return _gap(worst, ATOL)


@check("qcore", "hs-trace-norm-conversion")
def _norm_conversion(rng, faults):
    for d in (2, 3, 4):
        delta = np.asarray(random_density(d, d, rng)) - np.asarray(random_density(d, 1, rng))
        hs, tr = hs_norm(delta), trace_norm(delta)
        if not hs - ATOL <= tr <= math.sqrt(d) * hs + ATOL:
            return False, f"d={d}: ||.||_2={hs:.6f}, ||.||_1={tr:.6f}"
    return True, "||A||_2 <= ||A||_1 <= sqrt(d) ||A||_2"


@check("qcore", "symmetric-projector-invariance")
def _symmetric_projector(rng, faults):
    worst = 0.0
    for d, n in ((2, 3), (3, 2), (2, 4)):
        proj = np.asarray(symmetric_projector(d, n))
        worst = max(worst, np.linalg.norm(proj @ proj - proj))
        for perm in ((1, 0) + tuple(range(2, n)), tuple(range(1, n)) + (0,)):
            op = permutation_operator(perm, d)
            worst = max(worst, np.linalg.norm(op @ proj - proj), np.linalg.norm(op @ proj - proj @ op))
    return _gap(float(worst), ATOL)


@check("qcore", "partial-trace-positivity")
def _partial_trace(rng, faults):
    for d in (2, 3):
        rho = np.asarray(random_density(d * d, d * d, rng))
        for keep in ([0], [1]):
            reduced = partial_trace(rho, [d, d], keep)
            if np.min(np.linalg.eigvalsh(reduced)) < -ATOL or abs(np.trace(reduced) - 1.0) > ATOL:
                return False, f"d={d}, keep={keep}: reduced state is not a density matrix"
    return True, "partial traces of random states are states"


# =========================
# SCHURWEYL
# =========================

@check("schurweyl", "isotypic-projectors-resolve-identity")
def _projectors_complete(rng, faults):
    worst = 0.0
    for d, t in ((2, 2), (2, 3), (2, 4), (3, 3), (2, 5)):
        projs = [_projector(lam, d, faults, rng) for lam in partitions(t)]
        worst = max(worst, np.linalg.norm(sum(projs) - np.eye(d ** t)))
        for i, a in enumerate(projs):
            worst = max(worst, np.linalg.norm(a @ a - a))
            for b in projs[i + 1:]:
                worst = max(worst, np.linalg.norm(a @ b))
    return _gap(float(worst), ATOL)


@check("schurweyl", "projectors-commute-with-tensor-powers")
def _projectors_commute(rng, faults):
    worst = 0.0
    for d, t in ((2, 3), (3, 2), (3, 3)):
        power = kron_power(np.asarray(random_density(d, d, rng)), t)
        for lam in partitions(t):
            proj = _projector(lam, d, faults, rng)
            worst = max(worst, np.linalg.norm(proj @ power - power @ proj))
    return _gap(float(worst), ATOL)


@check("schurweyl", "schur-distribution-matches-projectors")
def _schur_distribution(rng, faults):
    worst = 0.0
    for d, t in ((2, 3), (3, 3), (2, 4)):
        rho = np.asarray(random_density(d, d, rng))
        power = kron_power(rho, t)
        for lam, p in weak_schur_distribution(rho, t).items():
            worst = max(worst, abs(p - float(np.real(np.trace(_projector(lam, d, faults, rng) @ power)))))
    return _gap(worst, ORACLE_ATOL)


@check("schurweyl", "partition-length-bound")
def _length_bound(rng, faults):
    for _ in range(20):
        d, t = int(rng.integers(2, 5)), int(rng.integers(1, 6))
        rho = random_density(d, int(rng.integers(1, d + 1)), rng)
        length = expected_partition_length(rho, t)
        if length > min(2.0 * math.sqrt(t), d) + ATOL:
            return False, f"E[len] = {length:.6f} exceeds min(2 sqrt(t), d) at d={d}, t={t}"
    return True, "E[len(lam)] <= min(2 sqrt(t), d) on 20 random states"


@check("schurweyl", "hayashi-moments-match-oracle")
def _hayashi_oracle(rng, faults):
    worst = 0.0
    for local_dim, n in ((2, 1), (2, 2), (3, 2), (2, 3)):
        gaps = moment_gaps(local_dim, n, rng)
        worst = max(worst, gaps["hayashi-first"], gaps["hayashi-second"])
    return _gap(worst, MOMENT_ATOL)


# =========================
# ESTIMATORS
# =========================

@check("estimators", "uniform-and-gps-moments-match-oracle")
def _uniform_gps(rng, faults):
    worst = 0.0
    for local_dim, n in ((2, 1), (3, 1), (4, 2), (2, 3)):
        gaps = moment_gaps(local_dim, n, rng)
        worst = max(worst, gaps["uniform-first"], gaps["uniform-second"], gaps["gps-refined-second"])
    return _gap(worst, MOMENT_ATOL)


@check("estimators", "gps-truncation-is-sum-of-squares")
def _gps_sos(rng, faults):
    for local_dim, n in ((2, 2), (3, 2), (2, 3)):
        psi = random_symmetric_state(local_dim, n, rng)
        lower = gps_truncated_second_moment(psi, local_dim) - gps_refined_second_moment(psi, local_dim)
        if not in_sos_cone(lower, local_dim):
            return False, f"truncated minus refined GPS moment leaves the SoS cone at D={local_dim}, n={n}"
    return True, "truncated minus refined GPS moment is in SoS(D)"


@check("estimators", "purification-channel-matches-twirl")
def _purification(rng, faults):
    worst = 0.0
    for d, r, n in ((2, 1, 2), (2, 2, 2), (2, 2, 3), (3, 2, 2)):
        worst = max(worst, validate_purification_channel(build_purification_channel(d, r, n, validate=False), rng))
    return _gap(worst, ORACLE_ATOL)


@check("estimators", "purification-channel-matches-sampled-purifications")
def _purification_sampled(rng, faults):
    channel = build_purification_channel(2, 2, 2)
    sigmas = monte_carlo_gap(channel, random_density(2, 2, rng), rng, samples=LAW_TRIALS)
    return sigmas <= MC_SIGMAS, f"{sigmas:.2f} standard errors from {LAW_TRIALS} sampled purifications"


@check("estimators", "ptsw-unbiased")
def _ptsw_unbiased(rng, faults):
    worst = 0.0
    for d, t in ((2, 2), (2, 3), (3, 2)):
        rho = np.asarray(random_density(d, d, rng))
        estimator = PtswEstimator(rho, t)
        worst = max(
            worst,
            np.linalg.norm(estimator.exact_mean() - rho),
            np.linalg.norm(estimator.exact_mean_oracle() - rho),
        )
    return _gap(float(worst), ORACLE_ATOL)


@check("estimators", "ptsw-conditional-second-moment")
def _ptsw_second(rng, faults):
    worst = 0.0
    for d, t in ((2, 2), (2, 3), (3, 2)):
        estimator = PtswEstimator(random_density(d, d, rng), t)
        for lam in estimator.branches:
            gap = estimator.conditional_second_moment(lam) - estimator.conditional_second_moment_oracle(lam)
            worst = max(worst, np.linalg.norm(gap))
    return _gap(float(worst), ORACLE_ATOL)


@check("estimators", "ptsw-truncation-is-sum-of-squares")
def _ptsw_sos(rng, faults):
    for d, t in ((2, 2), (2, 3)):
        rho = random_density(d, d, rng)
        lower = ptsw_truncated_second_moment(rho, t) - PtswEstimator(rho, t).exact_second_moment()
        if not in_sos_cone(lower, d):
            return False, f"truncated minus exact PTSW moment leaves the SoS cone at d={d}, t={t}"
    return True, "truncated minus exact PTSW moment is in SoS(d)"


@check("estimators", "tau-marginals-average-to-tensor-powers")
def _tau_marginals(rng, faults):
    for t in (2, 3):
        rho = random_density(2, 2, rng)
        for k in (1, 2):
            if not tau_lambda_marginal_check(rho, t, k):
                return False, f"averaged tau marginal differs from rho^(tensor {k}) at t={t}"
    return True, "sum_lam p(lam) tau_lam marginals equal rho^(tensor k), k in {1, 2}"


@check("estimators", "hayashi-acceptance-rate")
def _acceptance(rng, faults):
    worst = 1.0
    for local_dim, n in ((2, 2), (3, 2), (4, 3)):
        sampler = HayashiSampler.from_state(random_symmetric_state(local_dim, n, rng), local_dim)
        worst = min(worst, sampler.expected_rate)
    return worst >= 1e-4, f"smallest expected acceptance rate {worst:.3e}"


# =========================
# TESTERS
# =========================

@check("testers", "bucket-plan-invariants")
def _buckets(rng, faults):
    for d, eps in ((4, 0.5), (6, 0.4), (3, 0.3)):
        for sigma in (certify_sigma(d), random_density(d, d, rng)):
            failed = [name for name, ok in bucket_plan(sigma, eps).invariants().items() if not ok]
            if failed:
                return False, f"d={d}, eps={eps}: {', '.join(failed)}"
    return True, "tail mass, bucket ratio, block norms and bucket count hold"


@check("testers", "fixed-source-has-zero-variance")
def _fixed_source(rng, faults):
    rho = random_density(3, 3, rng)
    _, variance = purity_statistic_moments(FixedSource(rho), 8)
    return _gap(abs(variance), ATOL)


@check("testers", "uniform-tester-variance-bound")
def _uniform_variance(rng, faults):
    for d in (2, 4):
        rho, sigma = random_density(d, d, rng), random_density(d, d, rng)
        delta_sq = hs_norm(np.asarray(rho) - np.asarray(sigma)) ** 2
        for n in (4, 16, 64):
            _, variance = hs_statistic_moments(UniformPovmSource(rho), UniformPovmSource(sigma), n)
            bound = 10.0 * (delta_sq / (n * d ** 4) + 1.0 / (n * n * d * d))
            if variance > bound:
                return False, f"d={d}, n={n}: variance {variance:.3e} above {bound:.3e}"
    return True, "Var <= 10 (tr Delta^2 / (n d^4) + 1 / (n^2 d^2))"


@check("testers", "bow-batch-law")
def _bow_law(rng, faults):
    worst = 0.0
    for t in (2, 4):
        rho, sigma = random_density(2, 2, rng), random_density(2, 2, rng)
        law = BowBatchDistribution(rho, sigma, t)
        delta_sq = hs_norm(np.asarray(rho) - np.asarray(sigma)) ** 2
        worst = max(worst, abs(law.mean() - delta_sq))
        if law.variance() > 10.0 * (1.0 / t ** 2 + delta_sq / t):
            return False, f"t={t}: batch variance {law.variance():.3e} above the bound"
    return _gap(worst, ORACLE_ATOL)


@check("testers", "bow-variance-in-t")
def _bow_variance(rng, faults):
    table = bow_variance_table()
    for (distance, t), (law, bound) in table.items():
        if law.variance() > bound:
            return False, f"||Delta||={distance}, t={t}: variance {law.variance():.3e} above {bound:.3e}"
        gap = max(law_gaps(law.sample(LAW_TRIALS, rng), law.mean(), law.variance()))
        if gap > MC_SIGMAS:
            return False, f"||Delta||={distance}, t={t}: {LAW_TRIALS} sampled batches are {gap:.2f} standard errors off"
    for distance in sorted({key[0] for key in table}):
        variances = [table[key][0].variance() for key in sorted(table) if key[0] == distance]
        if np.any(np.diff(variances) > ATOL):
            return False, f"||Delta||={distance}: variance grows with t ({', '.join(f'{v:.3e}' for v in variances)})"
    return True, "Var z <= 10 (1/t^2 + ||Delta||^2 / t) and non-increasing in t"


@check("testers", "collision-statistic-laws")
def _statistic_laws(rng, faults):
    rho, sigma = random_density(2, 2, rng), random_density(2, 2, rng)
    gaps = statistic_law_gaps(rho, sigma, LAW_TRIALS, rng)
    worst = max(gaps, key=gaps.get)
    if gaps[worst] > MC_SIGMAS:
        return False, f"{worst}: {gaps[worst]:.2f} standard errors from the exact law"
    return True, f"{len(gaps)} sampled laws within {MC_SIGMAS:g} standard errors (worst {worst} at {gaps[worst]:.2f})"


@check("testers", "operating-points")
def _operating_points(rng, faults):
    # calibration imports the runner, which imports this module
    from src.harness.calibration import calibrate_point, success_probability

    profile = load_profile("default")
    seed = int(rng.integers(2 ** 31))
    calibrated = {}
    for t in (1, 2, 4):
        point = {"protocol": "mixedness", "d": 2, "t": t, "eps": 0.6}
        entry = calibrate_point(point, CALIBRATION_TARGET, CALIBRATION_TRIALS, CALIBRATION_MAX_N, seed, 1, profile)
        calibrated[t] = entry["n"]
    counts = list(calibrated.values())
    # slack for calibration noise
    if any(later > earlier + max(1, earlier // 4) for earlier, later in zip(counts, counts[1:])):
        return False, f"calibrated mixedness batch counts grow with t: {calibrated}"
    points = [({"protocol": "mixedness", "d": 2, "t": t, "eps": 0.6}, n) for t, n in calibrated.items()]
    points += [
        ({"protocol": "certify", "d": 4, "t": 2, "eps": 0.6}, None),
        ({"protocol": "closeness-unif", "d": 2, "t": 1, "eps": 0.5}, None),
        ({"protocol": "bow", "d": 2, "t": 2, "eps": 0.5}, None),
    ]
    points += [({"protocol": "purity", "d": d, "t": t, "eps": 0.2}, None) for d in (2, 3, 4) for t in (1, 2)]
    for point, n in points:
        success = success_probability(point, n, OPERATING_TRIALS, seed + 1, 1, profile)
        if success < 1.0 - MAX_ERROR_RATE:
            return False, f"{point} at n={n}: success {success:.3f} below {1.0 - MAX_ERROR_RATE:.3f}"
    return True, f"{len(points)} operating points within the error budget; mixedness n by t: {calibrated}"


@check("testers", "swap-test-probability")
def _swap(rng, faults):
    worst = 0.0
    for d in (2, 3):
        rho, sigma = np.asarray(random_density(d, d, rng)), np.asarray(random_density(d, 1, rng))
        expected = (1.0 + float(np.real(np.trace(rho @ sigma)))) / 2.0
        worst = max(worst, abs(swap_test_probability(rho, sigma) - expected))
    return _gap(worst, ORACLE_ATOL)


# =========================
# CHI2LAB
# =========================

def _random_scenario(rng):
    t = int(rng.integers(1, 3))
    n = int(rng.integers(1, 4))
    ell = int(rng.integers(1, 4))
    eps = float(rng.uniform(0.05, 0.4))
    outcomes = int(rng.integers(2 ** t, min(8, 2 ** t * 2) + 1))
    schedule = [random_rank_one_povm(2 ** t, outcomes, rng) for _ in range(n)]
    return HardInstanceEnsemble(2, ell, eps), schedule, n, t


@check("chi2lab", "chi2-below-ingster-suslina")
def _chi2_bound(rng, faults):
    for _ in range(50):
        ensemble, schedule, n, t = _random_scenario(rng)
        exact, bound = chi2_exact(ensemble, schedule, n, t), ingster_suslina_bound(ensemble, schedule, n, t)
        if exact > bound + 1e-12:
            return False, f"chi2 {exact:.6e} exceeds bound {bound:.6e} (ell={ensemble.ell}, n={n}, t={t})"
    return True, "chi2 <= Ingster-Suslina bound on 50 random scenarios"


@check("chi2lab", "phi-lueders-route")
def _phi_route(rng, faults):
    worst = 0.0
    for _ in range(5):
        ensemble, schedule, _, t = _random_scenario(rng)
        signs = ensemble.all_signs()
        phi = phi_matrix(ensemble, schedule[0], t)
        for a, b in rng.integers(0, len(signs), size=(4, 2)):
            worst = max(worst, abs(phi[a, b] - phi_lueders(ensemble, schedule[0], t, signs[a], signs[b])))
    return _gap(worst, 1e-10)


@check("chi2lab", "channel-axioms")
def _channel_axioms(rng, faults):
    for t in (1, 2):
        for _ in range(25):
            povm = random_rank_one_povm(2 ** t, int(rng.integers(2 ** t, 2 ** t + 4)), rng)
            channel = lueders_channel(povm)
            spectrum = channel.spectrum()
            if not (channel.is_unital() and channel.is_trace_preserving()):
                return False, f"Lueders channel of a {povm.outcomes}-outcome POVM is not unital and trace preserving"
            if np.max(np.abs(spectrum.imag)) > POVM_ATOL or np.min(spectrum.real) < -POVM_ATOL or np.max(spectrum.real) > 1 + POVM_ATOL:
                return False, "Lueders spectrum leaves [0, 1]"
            induced = induced_channel(channel, 2, t)
            if np.real(induced.trace()) > 2 + POVM_ATOL or np.max(np.abs(induced.spectrum())) > 1 + POVM_ATOL:
                return False, f"induced channel at t={t} has trace above d or an eigenvalue above 1"
    return True, "unital, trace preserving, spectra in [0, 1], induced trace <= d"


@check("chi2lab", "adversarial-basis-norm")
def _adversarial(rng, faults):
    for _ in range(50):
        channel = lueders_channel(random_rank_one_povm(2, int(rng.integers(2, 8)), rng))
        chosen = adversarial_basis(channel, 2)
        largest = adversarial_basis(channel, 2, smallest=False).projected_norm
        reference = projected_norm(channel, gellmann_basis(2), 2)
        if chosen.projected_norm > math.sqrt(2.0) + ATOL:
            return False, f"projected norm {chosen.projected_norm:.6f} above sqrt(2)"
        if chosen.projected_norm > min(reference, largest) + ATOL:
            return False, f"projected norm {chosen.projected_norm:.6f} (Gell-Mann {reference:.6f}, largest eigenvectors {largest:.6f})"
    return True, "||V^dag S V||_2 <= sqrt(2) at ell = d^2/2, no worse than Gell-Mann or the largest eigenvectors"


@check("chi2lab", "linearization-rate")
def _linearization(rng, faults):
    channel = lueders_channel(random_rank_one_povm(4, 6, rng))
    z = np.ones(3)
    eps_grid = 0.0125 * 2.0 ** np.arange(5)
    nonlinear = [abs(linearized_terms(HardInstanceEnsemble(2, 3, eps), channel, z, z, 2).nonlinear) for eps in eps_grid]
    slope = float(np.polyfit(np.log(eps_grid), np.log(nonlinear), 1)[0])
    return abs(slope - 3.0) <= 0.3, f"log-log slope of the non-linear part {slope:.3f}"


@check("chi2lab", "normalization-removal")
def _normalization(rng, faults):
    cases = [(2, t) for t in (1, 2)] + [(4, 1)]
    for d, t in cases:
        channel = lueders_channel(random_rank_one_povm(d ** t, d ** t + 2, rng))
        induced = induced_channel(channel, d, t)
        slack = 4.0 * math.exp(-d)
        for ell in range(1, min(10, d * d - 1) + 1):
            with_clamp, without = normalization_removal_gap(HardInstanceEnsemble(d, ell, 0.9), induced, 2, t)
            if with_clamp > without + slack + 1e-12:
                return False, f"E exp(a a' f) = {with_clamp:.6e} above E exp(f) + 4exp(-d) = {without + slack:.6e} (d={d}, t={t}, ell={ell})"
    return True, "E exp(a a' f) <= E exp(f) + 4exp(-d) for ell <= 10 at d in {2, 4}"


# =========================
# SUITE
# =========================

def verify_suite(scope: str = "all", faults=(), seed: int = 0, out=None) -> dict:
    """Run every check in scope; returns and writes the pass/fail report."""
    if scope not in SCOPES:
        raise ConfigError(f"unknown scope {scope!r}; expected one of {', '.join(SCOPES)}")
    faults = set(faults)
    unknown = faults - set(FAULTS)
    if unknown:
        raise ConfigError(f"unknown faults {sorted(unknown)}; expected any of {', '.join(FAULTS)}")
    selected = [c for c in CHECKS if scope == "all" or c.module == scope]
    results = []
    for index, item in enumerate(selected):
        rng = np.random.default_rng([seed, index])
        started = time.perf_counter()
        try:
            passed, detail = item.func(rng, faults)
        except Exception as exc:
            logger.exception("Check %s/%s raised", item.module, item.name)
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        seconds = time.perf_counter() - started
        logger.info("%s %s/%s (%.2fs): %s", "PASS" if passed else "FAIL", item.module, item.name, seconds, detail)
        results.append(
            {"name": item.name, "module": item.module, "passed": bool(passed), "detail": detail, "seconds": round(seconds, 3)}
        )
    report = {
        "scope": scope,
        "faults": sorted(faults),
        "passed": all(r["passed"] for r in results),
        "checks": results,
        "failures": [r["name"] for r in results if not r["passed"]],
    }
    path = VERIFY_DIR / f"verify_{scope}.json" if out is None else Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(report, f, indent=4)
    return report
