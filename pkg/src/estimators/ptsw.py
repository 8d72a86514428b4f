"""
ptsw.py

Unbiased single-state estimation from t copies via random purification:

    weak Schur sampling -> lam, ell = len(lam), D = d * ell
    tau_lam = Phi^{d,ell,t}(rho|_lam)          (symmetric subspace of (C^D)^t)
    |psi> <- Hayashi POVM on tau_lam
    rho_hat = ((D+t)/t) tr_B |psi><psi| - (ell/t) I_d

PtswEstimator precomputes every reachable branch once, so repeated sampling
only draws lam and runs the rejection sampler of that branch.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.config import ATOL, EIG_CLAMP, ORACLE_ATOL, dim_cap
from src.errors import UnreachableBranch
from src.estimators.povm import EstimatorOutput, HayashiSampler, RejectionStats
from src.estimators.purification import build_purification_channel
from src.qcore.operators import check_cap, kron_power, partial_trace, swap_operator
from src.qcore.states import HermitianOp, as_matrix
from src.schurweyl.moments import haar_moment_oracle
from src.schurweyl.partitions import Partition, as_partition
from src.schurweyl.projectors import conditional_state, draw_partition, weak_schur_distribution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PtswBranch:
    """Everything the pipeline needs once lam is known."""

    lam: Partition
    probability: float
    ell: int
    local_dim: int
    tau: np.ndarray
    sampler: HayashiSampler

    def tau_marginal(self, registers) -> np.ndarray:
        """Marginal of tau on the listed A registers (B registers traced out)."""
        d = self.local_dim // self.ell
        dims = [d, self.ell] * self.lam.t
        return partial_trace(self.tau, dims, [2 * k for k in registers])


class PtswEstimator:
    """Random-purification estimator of rho from batches of t copies."""

    def __init__(self, rho, t: int, validate_channels: bool = True):
        self.rho = np.array(as_matrix(rho))
        self.rho.setflags(write=False)
        self.d = self.rho.shape[0]
        self.t = int(t)
        check_cap((self.d * self.d) ** self.t, f"PTSW estimator d={self.d}, t={self.t}", cap=dim_cap())
        self.distribution = weak_schur_distribution(self.rho, self.t)
        self.branches = {}
        for lam, prob in self.distribution.items():
            if prob <= EIG_CLAMP:
                continue
            ell = lam.length()
            channel = build_purification_channel(self.d, ell, self.t, validate_channels)
            compressed = channel.apply_compressed(conditional_state(self.rho, self.t, lam))
            compressed = (compressed + compressed.conj().T) / 2.0
            basis = channel.output_basis()
            self.branches[lam] = PtswBranch(
                lam=lam,
                probability=prob,
                ell=ell,
                local_dim=self.d * ell,
                tau=basis @ compressed @ basis.conj().T,
                sampler=HayashiSampler(compressed, self.d * ell, self.t),
            )
        self._sampling = {lam: branch.probability for lam, branch in self.branches.items()}
        logger.debug("PTSW estimator d=%d t=%d with %d reachable branches", self.d, self.t, len(self.branches))

    # =========================
    # SAMPLING
    # =========================

    def sample(self, rng: np.random.Generator, stats: RejectionStats | None = None) -> EstimatorOutput:
        lam = draw_partition(self._sampling, rng)
        branch = self.branches[lam]
        psi = branch.sampler.sample(rng, stats)
        big_d, t, ell = branch.local_dim, self.t, branch.ell
        reduced = partial_trace(psi.projector(), [self.d, ell], [0])
        estimate = ((big_d + t) / t) * reduced - (ell / t) * np.eye(self.d)
        return EstimatorOutput(HermitianOp((estimate + estimate.conj().T) / 2.0), copies_consumed=t, aux=lam)

    # =========================
    # EXACT MOMENTS
    # =========================

    def branch(self, lam) -> PtswBranch:
        lam = as_partition(lam)
        if lam not in self.branches:
            raise UnreachableBranch(f"partition {lam} has probability {self.distribution.get(lam, 0.0):.3e}")
        return self.branches[lam]

    def conditional_mean_oracle(self, lam) -> np.ndarray:
        branch = self.branch(lam)
        big_d, t = branch.local_dim, self.t
        first = np.asarray(haar_moment_oracle(branch.tau, big_d, 1))
        return ((big_d + t) / t) * partial_trace(first, [self.d, branch.ell], [0]) - (branch.ell / t) * np.eye(self.d)

    def conditional_mean(self, lam) -> np.ndarray:
        """E[rho_hat | lam] = (tau_lam)_{A_1}, since GPS is unbiased for the one-copy marginal."""
        return self.branch(lam).tau_marginal([0])

    def exact_mean(self) -> np.ndarray:
        return sum(branch.probability * self.conditional_mean(lam) for lam, branch in self.branches.items())

    def exact_mean_oracle(self) -> np.ndarray:
        """sum_lam p(lam) E[rho_hat | lam], each term from the Haar moment oracle."""
        return sum(branch.probability * self.conditional_mean_oracle(lam) for lam, branch in self.branches.items())

    def conditional_second_moment(self, lam) -> np.ndarray:
        branch = self.branch(lam)
        t, ell, big_d = self.t, branch.ell, branch.local_dim
        tau_one = branch.tau_marginal([0])
        tau_two = branch.tau_marginal([0, 1]) if t >= 2 else None
        return _conditional_closed_form(tau_one, tau_two, self.d, ell, big_d, t)

    def conditional_second_moment_oracle(self, lam) -> np.ndarray:
        """Compose projector, purification channel, exact Hayashi moments and the partial trace."""
        branch = self.branch(lam)
        t, ell, big_d = self.t, branch.ell, branch.local_dim
        first = np.asarray(haar_moment_oracle(branch.tau, big_d, 1))
        second = np.asarray(haar_moment_oracle(branch.tau, big_d, 2))
        scale = (big_d + t) / t
        eye = np.eye(big_d)
        gps = scale ** 2 * second - (scale / t) * (np.kron(first, eye) + np.kron(eye, first)) + np.eye(big_d ** 2) / t ** 2
        return partial_trace(gps, [self.d, ell, self.d, ell], [0, 2])

    def exact_second_moment(self) -> np.ndarray:
        return sum(branch.probability * self.conditional_second_moment(lam) for lam, branch in self.branches.items())

    def expected_length(self) -> float:
        return float(sum(branch.probability * branch.ell for branch in self.branches.values()))


def _conditional_closed_form(tau_one, tau_two, d: int, ell: int, big_d: int, t: int) -> np.ndarray:
    eye = np.eye(d)
    swap = swap_operator(d)
    cross = np.kron(tau_one, eye) + np.kron(eye, tau_one)
    scale = big_d + t + 1
    out = (
        (1.0 / t) * (big_d + t) / scale * cross @ swap
        - ell / (t * scale) * cross
        + ell / t ** 2 * (big_d + t) / scale * swap
        - ell ** 2 / (t ** 2 * scale) * np.eye(d * d)
    )
    if t >= 2:
        out = out + (t - 1) / t * (big_d + t) / scale * tau_two
    return out


# =========================
# FUNCTIONAL INTERFACE
# =========================

def ptsw_estimate(rho, t: int, rng: np.random.Generator) -> EstimatorOutput:
    """One PTSW estimate; builds the estimator, so prefer PtswEstimator for repeated draws."""
    return PtswEstimator(rho, t).sample(rng)


def ptsw_conditional_second_moment(rho, t: int, lam) -> HermitianOp:
    """E[rho_hat tensor rho_hat | lam] from the closed form in the marginals of tau_lam."""
    lam = as_partition(lam)
    estimator = PtswEstimator(rho, t)
    if lam not in estimator.branches:
        raise UnreachableBranch(f"partition {lam} is unreachable (p = {estimator.distribution.get(lam, 0.0):.3e})")
    moment = estimator.conditional_second_moment(lam)
    return HermitianOp((moment + moment.conj().T) / 2.0)


def ptsw_truncated_second_moment(rho, t: int) -> np.ndarray:
    """((t-1)/t) rho tensor rho + (1/t)(rho tensor I + I tensor rho) SWAP + (E[ell]/t^2) SWAP."""
    matrix = as_matrix(rho)
    d = matrix.shape[0]
    dist = weak_schur_distribution(matrix, t)
    mean_length = sum(p * lam.length() for lam, p in dist.items())
    eye = np.eye(d)
    swap = swap_operator(d)
    cross = np.kron(matrix, eye) + np.kron(eye, matrix)
    return (t - 1) / t * np.kron(matrix, matrix) + cross @ swap / t + mean_length / t ** 2 * swap


def tau_lambda_marginal_check(rho, t: int, k: int, atol: float = ORACLE_ATOL) -> bool:
    """True iff sum_lam p(lam) (tau_lam)_{A_1..A_k} equals rho^{tensor k}."""
    if k < 1 or k > t:
        return False
    estimator = PtswEstimator(rho, t)
    averaged = sum(b.probability * b.tau_marginal(list(range(k))) for b in estimator.branches.values())
    gap = float(np.linalg.norm(averaged - kron_power(estimator.rho, k)))
    logger.debug("tau marginal check d=%d t=%d k=%d gap %.2e", estimator.d, t, k, gap)
    return gap <= max(atol, ATOL)
