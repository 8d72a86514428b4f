"""
povm.py

Measurement samplers and their exact moments.

- uniform POVM {d |psi><psi| dpsi}: exact two-stage sampler
- Hayashi POVM {D[n] |psi><psi|^{tensor n} dpsi}: rejection sampling against Haar
- GPS debiasing sigma_hat = ((D+n)/n) |psi><psi| - I/n

Closed-form first and second moments live next to the samplers so the
oracle tests can compare them one to one.
"""

# =========================
# IMPORTS
# =========================

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from src.config import EIG_CLAMP, HAYASHI_BATCH, HAYASHI_MAX_PROPOSALS, SUPPORT_ATOL, dim_cap
from src.errors import PreconditionError, ResourceLimit
from src.qcore.operators import check_cap, partial_trace, swap_operator, sym_dimension, symmetric_basis
from src.qcore.states import HermitianOp, PureState, as_matrix, complex_gaussian
from src.schurweyl.moments import infer_copies
from src.schurweyl.partitions import Partition

logger = logging.getLogger(__name__)


# =========================
# RESULT TYPES
# =========================

@dataclass(frozen=True)
class EstimatorOutput:
    """One estimate of a d x d state, the copies it used, and the partition for PTSW."""

    estimate: HermitianOp
    copies_consumed: int
    aux: Partition | None = None


@dataclass
class RejectionStats:
    """Running proposal/acceptance counts of a rejection sampler (owned by one caller)."""

    proposals: int = 0
    accepted: int = 0

    def record(self, proposals: int):
        self.proposals += proposals
        self.accepted += 1

    @property
    def rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else float("nan")


# =========================
# UNIFORM POVM
# =========================

def uniform_povm_sample(rho, rng: np.random.Generator) -> PureState:
    """Outcome of the uniform POVM on rho."""
    matrix = as_matrix(rho)
    d = matrix.shape[0]
    if d == 1:
        return PureState(np.ones(1, dtype=np.complex128))
    eigs, vecs = eigh(matrix)
    eigs = np.clip(eigs, 0.0, None)
    index = int(rng.choice(d, p=eigs / eigs.sum()))
    axis = vecs[:, index]
    # overlap^2 with the chosen eigenvector is Beta(2, d-1) under the tilted measure
    overlap_sq = rng.beta(2.0, d - 1.0)
    phase = np.exp(2j * np.pi * rng.random())
    rest = complex_gaussian(rng, d)
    rest -= axis * np.vdot(axis, rest)
    rest /= np.linalg.norm(rest)
    psi = np.sqrt(overlap_sq) * phase * axis + np.sqrt(1.0 - overlap_sq) * rest
    return PureState(psi / np.linalg.norm(psi))


def uniform_first_moment(rho) -> np.ndarray:
    matrix = as_matrix(rho)
    d = matrix.shape[0]
    return (matrix + np.eye(d)) / (d + 1)


def uniform_second_moment(rho) -> np.ndarray:
    matrix = as_matrix(rho)
    d = matrix.shape[0]
    eye = np.eye(d)
    swap = swap_operator(d)
    cross = np.kron(matrix, eye) + np.kron(eye, matrix)
    return (np.eye(d * d) + swap + cross + cross @ swap) / ((d + 1) * (d + 2))


# =========================
# HAYASHI POVM
# =========================

def tensor_power_rows(phi: np.ndarray, n: int) -> np.ndarray:
    """Row-wise n-fold Kronecker power of a (batch, D) array."""
    power = phi
    for _ in range(n - 1):
        power = (power[:, :, np.newaxis] * phi[:, np.newaxis, :]).reshape(phi.shape[0], -1)
    return power


class HayashiSampler:
    """Rejection sampler for the Hayashi POVM on a symmetric-subspace state.

    The state is held compressed to the symmetric subspace, so the
    acceptance probability of a Haar proposal phi is
    <phi^n| psi |phi^n> / lambda_max.
    """

    def __init__(self, compressed: np.ndarray, local_dim: int, n: int):
        check_cap(local_dim ** n, f"Hayashi POVM D={local_dim}, n={n}", cap=dim_cap())
        self.local_dim = int(local_dim)
        self.n = int(n)
        self.compressed = np.asarray(compressed, dtype=np.complex128)
        self.compressed.setflags(write=False)
        self.basis = symmetric_basis(local_dim, n)
        self.lambda_max = float(np.max(np.linalg.eigvalsh(self.compressed)))
        self.expected_rate = 1.0 / (sym_dimension(local_dim, n) * self.lambda_max)
        logger.debug(
            "Hayashi sampler D=%d n=%d lambda_max=%.4f expected acceptance %.4g",
            local_dim, n, self.lambda_max, self.expected_rate,
        )

    @classmethod
    def from_state(cls, psi_sym, local_dim: int) -> "HayashiSampler":
        matrix = as_matrix(psi_sym)
        n = infer_copies(matrix.shape[0], local_dim)
        check_cap(local_dim ** n, f"Hayashi POVM D={local_dim}, n={n}", cap=dim_cap())
        basis = symmetric_basis(local_dim, n)
        compressed = basis.conj().T @ matrix @ basis
        violation = np.linalg.norm(basis @ compressed @ basis.conj().T - matrix)
        if violation > SUPPORT_ATOL:
            raise PreconditionError(f"state is not supported on the symmetric subspace (violation {violation:.3e})")
        return cls(compressed, local_dim, n)

    def state(self) -> np.ndarray:
        return self.basis @ self.compressed @ self.basis.conj().T

    def sample(self, rng: np.random.Generator, stats: RejectionStats | None = None) -> PureState:
        if self.n == 1:
            if stats is not None:
                stats.record(1)
            return uniform_povm_sample(self.state(), rng)
        batch = int(min(HAYASHI_BATCH, max(8, np.ceil(2.0 / self.expected_rate))))
        examined = 0
        while examined < HAYASHI_MAX_PROPOSALS:
            phi = complex_gaussian(rng, (batch, self.local_dim))
            phi /= np.linalg.norm(phi, axis=1, keepdims=True)
            coeffs = tensor_power_rows(phi, self.n) @ self.basis.conj()
            weight = np.real(np.einsum("bs,st,bt->b", coeffs.conj(), self.compressed, coeffs))
            accepted = np.flatnonzero(rng.random(batch) * self.lambda_max < weight)
            if accepted.size:
                first = int(accepted[0])
                if stats is not None:
                    stats.record(examined + first + 1)
                return PureState(phi[first])
            examined += batch
        raise ResourceLimit("Hayashi rejection proposals", examined, HAYASHI_MAX_PROPOSALS)


def hayashi_sample(psi_sym, local_dim: int, rng: np.random.Generator, stats: RejectionStats | None = None) -> PureState:
    """One Hayashi-POVM outcome on psi_sym (a state on the symmetric subspace of (C^D)^{tensor n})."""
    return HayashiSampler.from_state(psi_sym, local_dim).sample(rng, stats)


def _marginals(psi, local_dim: int, n: int):
    dims = [local_dim] * n
    one = partial_trace(psi, dims, [0])
    two = partial_trace(psi, dims, [0, 1]) if n >= 2 else None
    return one, two


def hayashi_first_moment(psi_sym, local_dim: int) -> np.ndarray:
    psi = as_matrix(psi_sym)
    n = infer_copies(psi.shape[0], local_dim)
    one, _ = _marginals(psi, local_dim, n)
    return (np.eye(local_dim) + n * one) / (local_dim + n)


def hayashi_second_moment(psi_sym, local_dim: int) -> np.ndarray:
    psi = as_matrix(psi_sym)
    big_d = local_dim
    n = infer_copies(psi.shape[0], big_d)
    one, two = _marginals(psi, big_d, n)
    eye = np.eye(big_d)
    sym = np.eye(big_d * big_d) + swap_operator(big_d)
    cross = np.kron(one, eye) + np.kron(eye, one)
    out = sym + n * cross @ sym
    if n >= 2:
        out = out + n * (n - 1) * two
    return out / ((big_d + n) * (big_d + n + 1))


# =========================
# GPS DEBIASED ESTIMATOR
# =========================

def gps_from_outcome(psi: PureState, n: int) -> np.ndarray:
    big_d = psi.dim
    return ((big_d + n) / n) * psi.projector() - np.eye(big_d) / n


def gps_estimate(psi_sym, local_dim: int, rng: np.random.Generator, stats: RejectionStats | None = None) -> EstimatorOutput:
    """Unbiased estimate of the one-copy marginal of psi_sym."""
    sampler = HayashiSampler.from_state(psi_sym, local_dim)
    outcome = sampler.sample(rng, stats)
    estimate = gps_from_outcome(outcome, sampler.n)
    return EstimatorOutput(HermitianOp((estimate + estimate.conj().T) / 2.0), copies_consumed=sampler.n)


def gps_refined_second_moment(psi_sym, local_dim: int) -> np.ndarray:
    """Exact E[sigma_hat tensor sigma_hat] of the GPS estimator."""
    psi = as_matrix(psi_sym)
    big_d = local_dim
    n = infer_copies(psi.shape[0], big_d)
    one, two = _marginals(psi, big_d, n)
    eye = np.eye(big_d)
    swap = swap_operator(big_d)
    cross = np.kron(one, eye) + np.kron(eye, one)
    scale = big_d + n + 1
    out = (
        (1.0 / n) * (big_d + n) / scale * cross @ swap
        - cross / (n * scale)
        + (big_d + n) / (n * n * scale) * swap
        - np.eye(big_d * big_d) / (n * n * scale)
    )
    if n >= 2:
        out = out + (n - 1) / n * (big_d + n) / scale * two
    return out


def gps_truncated_second_moment(psi_sym, local_dim: int) -> np.ndarray:
    """((n-1)/n) psi_12 + (1/n)(psi_1 tensor I + I tensor psi_1) SWAP + SWAP/n^2."""
    psi = as_matrix(psi_sym)
    big_d = local_dim
    n = infer_copies(psi.shape[0], big_d)
    one, two = _marginals(psi, big_d, n)
    eye = np.eye(big_d)
    swap = swap_operator(big_d)
    cross = np.kron(one, eye) + np.kron(eye, one)
    out = cross @ swap / n + swap / (n * n)
    if n >= 2:
        out = out + (n - 1) / n * two
    return out


def clamp_psd(matrix: np.ndarray) -> np.ndarray:
    """Hermitian part with eigenvalues below EIG_CLAMP set to zero, renormalized to unit trace."""
    herm = (matrix + matrix.conj().T) / 2.0
    eigs, vecs = eigh(herm)
    eigs[eigs < EIG_CLAMP] = 0.0
    out = (vecs * eigs) @ vecs.conj().T
    return out / np.real(np.trace(out))
