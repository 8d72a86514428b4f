"""
channels.py

Finite rank-one POVMs, their Lueders channels

    H(X) = sum_x tr(M_x X) M_x / tr(M_x)

and the single-register channels they induce on C^d when the POVM acts on
t registers:

    H~_{j,k}(M) = tr_{all but j} H(M on register k, I/d elsewhere),   H~ = (1/t^2) sum_{j,k} H~_{j,k}
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import sqrtm

from src.config import POVM_ATOL
from src.errors import InvalidParameter, ShapeError
from src.qcore.operators import check_cap, kron_all, kron_power, partial_trace
from src.qcore.states import as_matrix, complex_gaussian, from_json, to_json
from src.qcore.superop import Superoperator

logger = logging.getLogger(__name__)


# =========================
# RANK-ONE POVMS
# =========================

@dataclass(frozen=True, eq=False)
class RankOnePovm:
    """Outcome x has element |psi_x><psi_x|, psi_x = vectors[:, x] (unnormalized)."""

    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.complex128, copy=True)
        if vectors.ndim != 2:
            raise ShapeError(f"POVM vectors must be a D x K array, got shape {vectors.shape}")
        gap = np.max(np.abs(vectors @ vectors.conj().T - np.eye(vectors.shape[0])))
        if gap > POVM_ATOL:
            raise InvalidParameter(f"POVM elements do not sum to the identity (max deviation {gap:.3e})")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def outcomes(self) -> int:
        return self.vectors.shape[1]

    def element(self, x: int) -> np.ndarray:
        psi = self.vectors[:, x]
        return np.outer(psi, psi.conj())

    def weights(self) -> np.ndarray:
        """tr(M_x) for every outcome."""
        return np.sum(np.abs(self.vectors) ** 2, axis=0)

    def to_json(self) -> dict:
        return {"vectors": to_json_vectors(self.vectors)}

    @classmethod
    def from_json(cls, obj: dict) -> "RankOnePovm":
        """Accepts {"vectors": ...} or {"outcomes": [matrix, ...]} with rank-one elements."""
        if "vectors" in obj:
            return cls(from_json_vectors(obj["vectors"]))
        columns = []
        for element in obj["outcomes"]:
            matrix = from_json(element, kind="matrix")
            eigs, vecs = np.linalg.eigh(matrix)
            columns.append(np.sqrt(max(eigs[-1], 0.0)) * vecs[:, -1])
        return cls(np.stack(columns, axis=1))


def to_json_vectors(vectors: np.ndarray) -> dict:
    """D x K array as {"rows", "cols", "data"} with interleaved (re, im), row-major."""
    flat = np.asarray(vectors).reshape(-1)
    data = np.empty(2 * flat.size)
    data[0::2], data[1::2] = flat.real, flat.imag
    return {"rows": int(vectors.shape[0]), "cols": int(vectors.shape[1]), "data": data.tolist()}


def from_json_vectors(obj: dict) -> np.ndarray:
    data = np.asarray(obj["data"], dtype=np.float64)
    rows, cols = int(obj["rows"]), int(obj["cols"])
    if data.size != 2 * rows * cols:
        raise ShapeError(f"{rows} x {cols} vectors need {2 * rows * cols} numbers, got {data.size}")
    return (data[0::2] + 1j * data[1::2]).reshape(rows, cols)


def random_rank_one_povm(dim: int, outcomes: int, rng: np.random.Generator) -> RankOnePovm:
    """S^{-1/2} G for a complex Gaussian dim x outcomes matrix G, S = G G^dag."""
    if outcomes < dim:
        raise InvalidParameter(f"a complete rank-one POVM on C^{dim} needs >= {dim} outcomes, got {outcomes}")
    g = complex_gaussian(rng, (dim, outcomes))
    frame = g @ g.conj().T
    root = sqrtm((frame + frame.conj().T) / 2.0)
    return RankOnePovm(np.linalg.solve(root, g))


def computational_basis_povm(dim: int) -> RankOnePovm:
    return RankOnePovm(np.eye(dim, dtype=np.complex128))


def outcome_distribution(povm: RankOnePovm, rho, t: int) -> np.ndarray:
    """p(x) = <psi_x| rho^{tensor t} |psi_x>."""
    matrix = as_matrix(rho)
    if povm.dim != matrix.shape[0] ** t:
        raise ShapeError(f"POVM acts on dimension {povm.dim}, but rho^(tensor {t}) has {matrix.shape[0] ** t}")
    state = kron_power(matrix, t)
    probs = np.real(np.einsum("ix,ij,jx->x", povm.vectors.conj(), state, povm.vectors))
    return np.clip(probs, 0.0, None)


# =========================
# CHANNELS
# =========================

def lueders_channel(povm: RankOnePovm) -> Superoperator:
    """S = sum_x vec(M_x / tr M_x) vec(M_x)^dag."""
    weights = povm.weights()
    keep = weights > 0
    elements = np.stack([povm.element(x).reshape(-1) for x in np.flatnonzero(keep)], axis=1)
    normalized = elements / weights[keep][np.newaxis, :]
    return Superoperator(normalized @ elements.conj().T, povm.dim, povm.dim)


def induced_channel(channel: Superoperator, d: int, t: int) -> Superoperator:
    """Average single-register channel of a map on (C^d)^{tensor t}."""
    if channel.in_dim != d ** t:
        raise ShapeError(f"channel acts on dimension {channel.in_dim}, expected d^t = {d ** t}")
    check_cap(channel.in_dim, f"induced channel d={d}, t={t}")
    if t == 1:
        return channel
    mixed = np.eye(d, dtype=np.complex128) / d
    dims = [d] * t

    def average(op):
        out = np.zeros((d, d), dtype=np.complex128)
        for k in range(t):
            image = channel.apply(kron_all([op if r == k else mixed for r in range(t)]))
            for j in range(t):
                out += partial_trace(image, dims, [j])
        return out / t ** 2

    return Superoperator.from_map(average, d)
