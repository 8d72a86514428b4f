"""
purification.py

The random purification channel Phi^{d,r,n}: n copies of a rank-<=r state on
C^d go to the Haar average of n copies of its purification on C^d x C^r.

Construction, per isotypic block lam of the input:
    len(lam) <= r : (dim P_lam / dim Q^r_lam) Pi_sym^{AB} (Pi_lam X Pi_lam tensor I_B) Pi_sym^{AB}
    len(lam) >  r : tr(Pi_lam X) Pi_sym^{AB} / (dr)[n]
Output registers are ordered A1 B1 A2 B2 ..., each pair a C^{d r} register with
joint index a * r + b. Outputs live in the symmetric subspace, so they are
kept compressed to it.

The exact U(r) twirl and a Monte Carlo purification average serve as oracles.
"""

# =========================
# IMPORTS
# =========================

import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh, pinv

from src.config import MC_SIGMAS, ORACLE_ATOL, dim_cap
from src.errors import ConstructionError, InvalidParameter, PreconditionError
from src.qcore.operators import check_cap, kron_power, partial_trace, permutation_operator, permute_registers, sym_dimension, symmetric_basis
from src.qcore.states import as_matrix, haar_unitary, random_density
from src.qcore.superop import Superoperator
from src.schurweyl.partitions import cycle_type, gl_dimension, irrep_dimension, partitions
from src.schurweyl.projectors import projector_matrix

logger = logging.getLogger(__name__)

DIAGNOSTIC_SAMPLES = 2_000
STDERR_FLOOR = 1e-12


# =========================
# CHANNEL
# =========================

@dataclass(frozen=True)
class PurificationChannel:
    """Phi^{d,r,n} acting on operators of (C^d)^{tensor n}."""

    d: int
    r: int
    n: int

    @property
    def in_dim(self) -> int:
        return self.d ** self.n

    @property
    def out_dim(self) -> int:
        return (self.d * self.r) ** self.n

    @property
    def sym_dim(self) -> int:
        return sym_dimension(self.d * self.r, self.n)

    def output_basis(self) -> np.ndarray:
        """Isometry onto the symmetric subspace of (C^{dr})^{tensor n}."""
        return symmetric_basis(self.d * self.r, self.n)

    def _split_basis(self) -> np.ndarray:
        return _split_basis(self.d, self.r, self.n)

    def block_coefficient(self, lam) -> float:
        return irrep_dimension(lam) / gl_dimension(lam, self.r)

    def apply_compressed(self, op) -> np.ndarray:
        """Phi(op) in coordinates of output_basis()."""
        x = as_matrix(op)
        if x.shape != (self.in_dim, self.in_dim):
            raise InvalidParameter(f"expected a {self.in_dim} x {self.in_dim} input, got {x.shape}")
        split = self._split_basis()
        out = np.zeros((self.sym_dim, self.sym_dim), dtype=np.complex128)
        for lam in partitions(self.n):
            if lam.length() > self.d:
                continue
            proj = projector_matrix(lam, self.d)
            block = proj @ x @ proj
            if lam.length() <= self.r:
                out += self.block_coefficient(lam) * np.einsum("abs,ac,cbt->st", split.conj(), block, split)
            else:
                out += np.trace(block) * np.eye(self.sym_dim) / self.sym_dim
        return out

    def apply(self, op) -> np.ndarray:
        basis = self.output_basis()
        return basis @ self.apply_compressed(op) @ basis.conj().T

    def liouville(self) -> Superoperator:
        check_cap(self.in_dim * self.out_dim, f"purification Liouville matrix d={self.d}, r={self.r}, n={self.n}")
        return Superoperator.from_map(self.apply, self.in_dim, self.out_dim)

    def choi(self) -> np.ndarray:
        return self.liouville().choi()


@lru_cache(maxsize=32)
def _split_basis(d: int, r: int, n: int) -> np.ndarray:
    """Symmetric basis of (C^{dr})^n reshaped to (A-registers, B-registers, column)."""
    basis = symmetric_basis(d * r, n)
    columns = basis.shape[1]
    tensor = basis.reshape((d, r) * n + (columns,))
    axes = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)] + [2 * n]
    split = np.ascontiguousarray(tensor.transpose(axes).reshape(d ** n, r ** n, columns))
    split.setflags(write=False)
    return split


# =========================
# ORACLES
# =========================

def purification_vector(rho, r: int) -> np.ndarray:
    """|rho> = sum_k sqrt(p_k) |e_k> tensor |k> on C^d x C^r."""
    matrix = as_matrix(rho)
    d = matrix.shape[0]
    eigs, vecs = eigh(matrix)
    order = np.argsort(eigs)[::-1]
    eigs, vecs = eigs[order], vecs[:, order]
    if r < d and np.any(eigs[r:] > 1e-10):
        raise PreconditionError(f"state has rank above the purification dimension r={r}")
    vector = np.zeros(d * r, dtype=np.complex128)
    for k in range(min(r, d)):
        vector += np.sqrt(max(eigs[k], 0.0)) * np.kron(vecs[:, k], np.eye(r)[k])
    return vector


def exact_twirl_average(rho, r: int, n: int) -> np.ndarray:
    """E_U (I tensor U)^{tensor n} |rho><rho|^{tensor n} (I tensor U^dag)^{tensor n}, exactly.

    Weingarten calculus on the B registers: with C_pi = tr_B(M (I tensor V(pi)^dag)) and
    Gram matrix G = [r^{#cycles(pi^-1 sigma)}], the twirl is sum_sigma (G^+ C)_sigma tensor V(sigma).
    """
    matrix = as_matrix(rho)
    d = matrix.shape[0]
    check_cap((d * r) ** n, f"purification twirl d={d}, r={r}, n={n}")
    vector = purification_vector(matrix, r)
    full = kron_power(np.outer(vector, vector.conj()), n)
    interleaved_dims = [d, r] * n
    grouped = permute_registers(full, interleaved_dims, [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)])
    perms = list(itertools.permutations(range(n)))
    b_ops = [permutation_operator(pi, r) for pi in perms]
    dims = [d ** n, r ** n]
    coeffs = [partial_trace(grouped @ np.kron(np.eye(d ** n), op.conj().T), dims, [0]) for op in b_ops]
    gram = np.array(
        [[float(r ** cycle_type(_compose_inverse(pi, sigma)).length()) for sigma in perms] for pi in perms]
    )
    weights = pinv(gram)
    twirled = np.zeros_like(grouped)
    for s, op in enumerate(b_ops):
        a_part = sum(weights[s, p] * coeffs[p] for p in range(len(perms)))
        twirled += np.kron(a_part, op)
    back = []
    for k in range(n):
        back.extend([k, n + k])
    return permute_registers(twirled, [d] * n + [r] * n, back)


def _compose_inverse(pi, sigma) -> tuple:
    inv = [0] * len(pi)
    for k, p in enumerate(pi):
        inv[p] = k
    return tuple(inv[s] for s in sigma)


def monte_carlo_purification_average(rho, r: int, n: int, samples: int, rng: np.random.Generator):
    """Sample mean and entrywise standard error of |psi_U><psi_U|^{tensor n} over Haar U on C^r."""
    vector = purification_vector(rho, r)
    d = as_matrix(rho).shape[0]
    size = (d * r) ** n
    total = np.zeros((size, size), dtype=np.complex128)
    total_sq = np.zeros((size, size), dtype=np.float64)
    base = vector.reshape(d, r)
    for _ in range(samples):
        rotated = (base @ haar_unitary(r, rng).T).reshape(-1)
        power = rotated
        for _ in range(n - 1):
            power = np.kron(power, rotated)
        outer = np.outer(power, power.conj())
        total += outer
        total_sq += np.abs(outer) ** 2
    mean = total / samples
    var = np.maximum(total_sq / samples - np.abs(mean) ** 2, 0.0)
    return mean, np.sqrt(var / samples)


# =========================
# CONSTRUCTION
# =========================

def validate_purification_channel(channel: PurificationChannel, rng: np.random.Generator, trials: int = 2) -> float:
    """Largest Frobenius gap between the channel and the exact twirl on random rank-r tensor powers."""
    worst = 0.0
    for _ in range(trials):
        rho = random_density(channel.d, min(channel.r, channel.d), rng)
        got = channel.apply(kron_power(rho, channel.n))
        if channel.n == 1:
            want = np.kron(np.asarray(rho), np.eye(channel.r) / channel.r)
        else:
            want = exact_twirl_average(rho, channel.r, channel.n)
        worst = max(worst, float(np.linalg.norm(got - want)))
    return worst


def monte_carlo_gap(channel: PurificationChannel, rho, rng: np.random.Generator, samples: int = DIAGNOSTIC_SAMPLES) -> float:
    """Largest entrywise distance of Phi(rho^{tensor n}) from sampled purification averages, in standard errors."""
    mean, stderr = monte_carlo_purification_average(rho, channel.r, channel.n, samples, rng)
    got = channel.apply(kron_power(rho, channel.n))
    return float(np.max(np.abs(got - mean) / np.maximum(stderr, STDERR_FLOOR)))


def _construction_failure(channel: PurificationChannel, gap: float, rng: np.random.Generator) -> ConstructionError:
    rho = random_density(channel.d, min(channel.r, channel.d), rng)
    sigmas = monte_carlo_gap(channel, rho, rng)
    # tells a broken closed form apart from a broken oracle
    side = "channel" if sigmas > MC_SIGMAS else "twirl oracle"
    return ConstructionError(
        f"purification channel d={channel.d}, r={channel.r}, n={channel.n} misses the twirl oracle by {gap:.3e}; "
        f"against {DIAGNOSTIC_SAMPLES} Monte Carlo purifications it is off by {sigmas:.1f} standard errors, "
        f"so the {side} is at fault"
    )


@lru_cache(maxsize=64)
def build_purification_channel(d: int, r: int, n: int, validate: bool = True) -> PurificationChannel:
    """Build Phi^{d,r,n}; the candidate must reproduce the twirl oracle or construction fails."""
    if d < 1 or r < 1 or n < 1:
        raise InvalidParameter(f"need d, r, n >= 1, got d={d}, r={r}, n={n}")
    check_cap((d * r) ** n, f"purification channel d={d}, r={r}, n={n}", cap=dim_cap())
    channel = PurificationChannel(d, r, n)
    if validate:
        rng = np.random.default_rng(d * 1_000 + r * 10 + n)
        gap = validate_purification_channel(channel, rng)
        if gap > ORACLE_ATOL:
            raise _construction_failure(channel, gap, rng)
        logger.debug("Purification channel d=%d r=%d n=%d validated (gap %.2e)", d, r, n, gap)
    return channel
