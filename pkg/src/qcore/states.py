"""
states.py

Validated state and operator containers plus Haar sampling.

HermitianOp, DensityMatrix and PureState are frozen dataclasses holding
read-only complex arrays. They validate on construction so every value
that leaves this module satisfies its invariants.
"""

# =========================
# IMPORTS
# =========================

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from src.config import ATOL
from src.errors import InvalidDimension, InvalidParameter, ShapeError


def _readonly(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


def as_matrix(op) -> np.ndarray:
    """Return the complex matrix behind an operator container or array."""
    if isinstance(op, HermitianOp):
        return op.entries
    if isinstance(op, PureState):
        return op.projector()
    return np.asarray(op, dtype=np.complex128)


# =========================
# CONTAINERS
# =========================

@dataclass(frozen=True)
class HermitianOp:
    """Hermitian matrix (no trace or positivity constraint)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise ShapeError(f"expected a non-empty square matrix, got shape {entries.shape}")
        skew = np.max(np.abs(entries - entries.conj().T))
        if skew > ATOL:
            raise InvalidParameter(f"matrix is not Hermitian (max |A - A^dag| = {skew:.3e})")
        object.__setattr__(self, "entries", _readonly(entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


@dataclass(frozen=True)
class DensityMatrix(HermitianOp):
    """Hermitian, positive semidefinite, unit-trace matrix."""

    def __post_init__(self):
        super().__post_init__()
        trace = np.trace(self.entries)
        if abs(trace - 1.0) > ATOL:
            raise InvalidParameter(f"density matrix must have unit trace, got {trace.real:.12f}")
        min_eig = float(np.min(np.linalg.eigvalsh(self.entries)))
        if min_eig < -ATOL:
            raise InvalidParameter(f"density matrix must be PSD, min eigenvalue {min_eig:.3e}")

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries.conj().T, self.entries)))


@dataclass(frozen=True)
class PureState:
    """Unit vector in C^d."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] < 1:
            raise ShapeError(f"expected a non-empty vector, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise InvalidParameter(f"pure state must have unit norm, got {norm:.12f}")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.projector())


# =========================
# SERIALIZATION
# =========================

def to_json(op) -> dict:
    """Row-major interleaved (re, im) encoding: {"dim": d, "data": [...]}."""
    if isinstance(op, PureState):
        flat = op.amplitudes
        dim = op.dim
    else:
        matrix = as_matrix(op)
        flat = matrix.reshape(-1)
        dim = matrix.shape[0]
    data = np.empty(2 * flat.size, dtype=np.float64)
    data[0::2] = flat.real
    data[1::2] = flat.imag
    return {"dim": int(dim), "data": data.tolist()}


def from_json(obj: dict | str, kind: str = "hermitian"):
    """Inverse of to_json. kind is one of "hermitian", "density", "pure", "matrix"."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    dim = int(obj["dim"])
    data = np.asarray(obj["data"], dtype=np.float64)
    values = data[0::2] + 1j * data[1::2]
    if kind == "pure":
        if values.size != dim:
            raise ShapeError(f"pure state of dim {dim} needs {2 * dim} numbers, got {data.size}")
        return PureState(values)
    if values.size != dim * dim:
        raise ShapeError(f"matrix of dim {dim} needs {2 * dim * dim} numbers, got {data.size}")
    matrix = values.reshape(dim, dim)
    if kind == "density":
        return DensityMatrix(matrix)
    if kind == "hermitian":
        return HermitianOp(matrix)
    if kind == "matrix":
        return matrix
    raise InvalidParameter(f"unknown serialization kind {kind!r}")


# =========================
# HAAR SAMPLING
# =========================

def complex_gaussian(rng: np.random.Generator, size) -> np.ndarray:
    """Standard complex normal samples, E|z|^2 = 1."""
    return (rng.normal(size=size) + 1j * rng.normal(size=size)) / np.sqrt(2.0)


def haar_state(d: int, rng: np.random.Generator) -> PureState:
    """Haar-random pure state on C^d by Gaussian normalization."""
    if d < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {d}")
    if d == 1:
        return PureState(np.ones(1, dtype=np.complex128))
    vec = complex_gaussian(rng, d)
    return PureState(vec / np.linalg.norm(vec))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with the phase of diag(R) divided out."""
    if d < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {d}")
    z = complex_gaussian(rng, (d, d))
    q, r = qr(z)
    diag = np.diag(r)
    phases = diag / np.abs(diag)
    return q * phases[np.newaxis, :]


# =========================
# STATE CONSTRUCTORS
# =========================

def maximally_mixed(d: int) -> DensityMatrix:
    if d < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {d}")
    return DensityMatrix(np.eye(d, dtype=np.complex128) / d)


def random_density(d: int, rank: int, rng: np.random.Generator) -> DensityMatrix:
    """Random density matrix of exact rank from a Ginibre d x rank matrix."""
    if d < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {d}")
    if rank < 1 or rank > d:
        raise InvalidParameter(f"rank must satisfy 1 <= rank <= d={d}, got {rank}")
    g = complex_gaussian(rng, (d, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2.0
    return DensityMatrix(rho / np.real(np.trace(rho)))


def diagonal_state(probabilities) -> DensityMatrix:
    probs = np.asarray(probabilities, dtype=np.float64)
    return DensityMatrix(np.diag(probs / probs.sum()).astype(np.complex128))
