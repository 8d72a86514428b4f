"""
projectors.py

Isotypic projectors of (C^d)^{tensor t} under S_t x GL(d), weak Schur
sampling and single-copy GL(d) irrep isometries.

Projectors are central group-algebra elements
    Pi_lam = (dim_lam / t!) * sum_mu chi^lam(mu) K_mu
where K_mu is the sum of V(pi) over the permutations of cycle type mu.
Class sums are built once per (d, t) and cached behind a lock.
"""

import itertools
import logging
import threading
from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.linalg import orth

from src.config import EIG_CLAMP, MAX_PERMUTATION_T, dim_cap
from src.errors import ConstructionError, InvalidParameter, ResourceLimit
from src.qcore.operators import check_cap, kron_all, kron_power, permutation_indices, symmetric_projector
from src.qcore.states import DensityMatrix, HermitianOp, as_matrix
from src.schurweyl.partitions import (
    Partition,
    as_partition,
    character,
    class_size,
    cycle_type,
    gl_dimension,
    irrep_dimension,
    partitions,
)

logger = logging.getLogger(__name__)


# =========================
# CLASS-SUM CACHE
# =========================

class ProjectorCache:
    """Thread-safe cache of permutation class sums, projectors and irrep isometries."""

    def __init__(self):
        self._lock = threading.RLock()
        self._class_sums = {}
        self._projectors = {}
        self._isometries = {}

    def clear(self):
        with self._lock:
            self._class_sums.clear()
            self._projectors.clear()
            self._isometries.clear()

    def class_sums(self, d: int, t: int) -> dict:
        key = (d, t)
        cached = self._class_sums.get(key)
        if cached is not None:
            return cached
        with self._lock:
            if key not in self._class_sums:
                self._class_sums[key] = _build_class_sums(d, t)
            return self._class_sums[key]

    def projector(self, lam: Partition, d: int) -> np.ndarray:
        key = (lam.parts, d)
        cached = self._projectors.get(key)
        if cached is not None:
            return cached
        with self._lock:
            if key not in self._projectors:
                self._projectors[key] = _build_projector(lam, d, self)
            return self._projectors[key]

    def isometry(self, lam: Partition, d: int) -> np.ndarray:
        key = (lam.parts, d)
        cached = self._isometries.get(key)
        if cached is not None:
            return cached
        with self._lock:
            if key not in self._isometries:
                self._isometries[key] = _build_irrep_isometry(lam, d)
            return self._isometries[key]


def _check_projector_size(d: int, t: int):
    check_cap(d ** t, f"isotypic projector d={d}, t={t}")
    if t > MAX_PERMUTATION_T:
        raise ResourceLimit(f"permutation sum over S_{t}", t, MAX_PERMUTATION_T)


def _build_class_sums(d: int, t: int) -> dict:
    _check_projector_size(d, t)
    size = d ** t
    rows = np.arange(size)
    sums = {}
    for pi in itertools.permutations(range(t)):
        mu = cycle_type(pi).parts
        block = sums.get(mu)
        if block is None:
            block = sums[mu] = np.zeros((size, size), dtype=np.float64)
        block[rows, permutation_indices(pi, d)] += 1.0
    logger.debug("Built %d class sums for d=%d, t=%d", len(sums), d, t)
    return sums


def _build_projector(lam: Partition, d: int, cache: ProjectorCache) -> np.ndarray:
    t = lam.t
    _check_projector_size(d, t)
    size = d ** t
    if lam.length() > d:
        out = np.zeros((size, size), dtype=np.complex128)
    elif lam.length() == 1:
        out = np.array(symmetric_projector(d, t).entries)
    else:
        out = np.zeros((size, size), dtype=np.float64)
        for mu, block in cache.class_sums(d, t).items():
            chi = character(lam, mu)
            if chi:
                out += chi * block
        out = out.astype(np.complex128) * (irrep_dimension(lam) / factorial(t))
    out.setflags(write=False)
    return out


PROJECTOR_CACHE = ProjectorCache()


# =========================
# PROJECTORS
# =========================

def isotypic_projector(lam, d: int) -> HermitianOp:
    """Projector onto the lam block of (C^d)^{tensor t}; zero when len(lam) > d."""
    lam = as_partition(lam)
    if d < 1:
        raise InvalidParameter(f"dimension must be >= 1, got {d}")
    return HermitianOp(PROJECTOR_CACHE.projector(lam, d))


def projector_matrix(lam, d: int) -> np.ndarray:
    """Read-only cached projector array (no HermitianOp wrapper)."""
    return PROJECTOR_CACHE.projector(as_partition(lam), d)


# =========================
# WEAK SCHUR SAMPLING
# =========================

@dataclass(frozen=True)
class SchurSampleOutcome:
    """Outcome of weak Schur sampling: label, its probability and the post-measurement state."""

    lam: Partition
    probability: float
    conditional: DensityMatrix


def _spectrum(rho) -> np.ndarray:
    eigs = np.linalg.eigvalsh(as_matrix(rho))
    eigs[eigs < EIG_CLAMP] = 0.0
    return eigs


def schur_probability(eigs: np.ndarray, lam: Partition) -> float:
    """dim_lam * s_lam(eigs), expanded in power sums over cycle types."""
    if lam.length() > len(eigs):
        return 0.0
    t = lam.t
    power_sums = {k: float(np.sum(eigs ** k)) for k in range(1, t + 1)}
    total = 0.0
    for mu in partitions(t):
        chi = character(lam, mu)
        if chi:
            total += class_size(mu) * chi * np.prod([power_sums[k] for k in mu.parts])
    return max(0.0, irrep_dimension(lam) * total / factorial(t))


def weak_schur_distribution(rho, t: int) -> dict:
    """Exact {lam: tr(Pi_lam rho^{tensor t})} over all partitions of t."""
    d = as_matrix(rho).shape[0]
    check_cap(d ** t, f"weak Schur sampling d={d}, t={t}")
    eigs = _spectrum(rho)
    dist = {lam: schur_probability(eigs, lam) for lam in partitions(t)}
    norm = sum(dist.values())
    return {lam: p / norm for lam, p in dist.items()}


def draw_partition(distribution: dict, rng: np.random.Generator) -> Partition:
    labels = list(distribution)
    probs = np.array([distribution[lam] for lam in labels])
    return labels[int(rng.choice(len(labels), p=probs / probs.sum()))]


def conditional_state(rho, t: int, lam) -> np.ndarray:
    """Pi_lam rho^{tensor t} Pi_lam normalized; raises if the branch has zero weight."""
    lam = as_partition(lam)
    d = as_matrix(rho).shape[0]
    proj = projector_matrix(lam, d)
    block = proj @ kron_power(rho, t) @ proj
    weight = float(np.real(np.trace(block)))
    if weight <= EIG_CLAMP:
        raise InvalidParameter(f"partition {lam} has zero weight for this state")
    return block / weight


def weak_schur_sample(rho, t: int, rng: np.random.Generator) -> SchurSampleOutcome:
    rho_m = as_matrix(rho)
    dist = weak_schur_distribution(rho_m, t)
    lam = draw_partition(dist, rng)
    cond = conditional_state(rho_m, t, lam)
    return SchurSampleOutcome(lam=lam, probability=dist[lam], conditional=DensityMatrix((cond + cond.conj().T) / 2))


def expected_partition_length(rho, t: int) -> float:
    dist = weak_schur_distribution(rho, t)
    return float(sum(p * lam.length() for lam, p in dist.items()))


# =========================
# GL(d) IRREP ISOMETRIES
# =========================

def _row_symmetrizer(lam: Partition, d: int) -> np.ndarray:
    return kron_all([symmetric_projector(d, row).entries for row in lam.parts])


def _column_antisymmetrizer(lam: Partition, d: int) -> np.ndarray:
    # registers are filled row by row; column j holds the j-th register of every long-enough row
    offsets = np.cumsum((0,) + lam.parts[:-1])
    columns = [[int(offsets[i]) + j for i in range(lam.length()) if lam.parts[i] > j] for j in range(lam.parts[0])]
    t = lam.t
    size = d ** t
    rows = np.arange(size)
    out = np.zeros((size, size), dtype=np.float64)
    for choice in itertools.product(*[list(itertools.permutations(col)) for col in columns]):
        pi = list(range(t))
        sign = 1
        for col, image in zip(columns, choice):
            for src, dst in zip(col, image):
                pi[src] = dst
            sign *= _permutation_sign([col.index(x) for x in image])
        out[rows, permutation_indices(pi, d)] += sign
    return out


def _permutation_sign(perm) -> int:
    return -1 if (len(perm) - cycle_type(perm).length()) % 2 else 1


def _build_irrep_isometry(lam: Partition, d: int) -> np.ndarray:
    expected = gl_dimension(lam, d)
    size = d ** lam.t
    if expected == 0:
        return np.zeros((size, 0), dtype=np.complex128)
    symmetrizer = _row_symmetrizer(lam, d) @ _column_antisymmetrizer(lam, d)
    basis = orth(symmetrizer)
    if basis.shape[1] != expected:
        raise ConstructionError(
            f"Young symmetrizer for {lam} at d={d} has rank {basis.shape[1]}, expected {expected}"
        )
    basis = np.ascontiguousarray(basis, dtype=np.complex128)
    basis.setflags(write=False)
    return basis


def irrep_isometry(lam, d: int) -> np.ndarray:
    """Isometry onto one GL(d) irrep copy of type lam inside (C^d)^{tensor t}."""
    lam = as_partition(lam)
    check_cap(d ** lam.t, f"irrep isometry d={d}, t={lam.t}", cap=dim_cap())
    return PROJECTOR_CACHE.isometry(lam, d)


def lie_generators(lam, d: int) -> np.ndarray:
    """E_ab = W^dag (sum_i e_ab on register i) W, stacked as (d, d, q, q)."""
    lam = as_partition(lam)
    w = irrep_isometry(lam, d)
    t = lam.t
    q = w.shape[1]
    out = np.zeros((d, d, q, q), dtype=np.complex128)
    eye = np.eye(d, dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            unit = np.zeros((d, d), dtype=np.complex128)
            unit[a, b] = 1.0
            total = sum(kron_all([unit if k == i else eye for k in range(t)]) for i in range(t))
            out[a, b] = w.conj().T @ total @ w
    return out
