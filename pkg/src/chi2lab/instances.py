"""
instances.py

Rademacher hard instances around the maximally mixed state:

    Delta_z = (c eps / sqrt(d ell)) sum_{i <= ell} z_i V_i,   z in {+1, -1}^ell
    a_z     = min{1, 1 / (d ||Delta_z||_op)}
    rho_z   = I/d + a_z Delta_z

V_1..V_{d^2} is an orthonormal Hermitian operator basis with V_{d^2} = I/sqrt(d).
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from src.config import ATOL, CHI2_MAX_ELL, HARD_INSTANCE_C
from src.errors import InvalidParameter, ResourceLimit
from src.qcore.operators import gellmann_basis, operator_norm, trace_norm
from src.qcore.states import DensityMatrix

logger = logging.getLogger(__name__)


def validate_operator_basis(basis, d: int):
    """Raise InvalidParameter unless basis is orthonormal, Hermitian and ends with I/sqrt(d)."""
    if len(basis) != d * d:
        raise InvalidParameter(f"basis needs {d * d} elements, got {len(basis)}")
    stack = np.stack([np.asarray(v, dtype=np.complex128) for v in basis])
    if stack.shape[1:] != (d, d):
        raise InvalidParameter(f"basis elements must be {d} x {d}, got {stack.shape[1:]}")
    if np.max(np.abs(stack - stack.conj().transpose(0, 2, 1))) > ATOL:
        raise InvalidParameter("basis elements must be Hermitian")
    flat = stack.reshape(d * d, -1)
    gram = flat.conj() @ flat.T
    if np.max(np.abs(gram - np.eye(d * d))) > ATOL:
        raise InvalidParameter("basis is not orthonormal")
    if np.max(np.abs(stack[-1] - np.eye(d) / np.sqrt(d))) > ATOL:
        raise InvalidParameter("last basis element must be I/sqrt(d)")


@dataclass(frozen=True, eq=False)
class HardInstanceEnsemble:
    """Uniform mixture over z of rho_z."""

    d: int
    ell: int
    eps: float
    c: float = HARD_INSTANCE_C
    basis: tuple = field(default=None)

    def __post_init__(self):
        if self.d < 2:
            raise InvalidParameter(f"hard instances need d >= 2, got {self.d}")
        if not 1 <= self.ell <= self.d * self.d - 1:
            raise InvalidParameter(f"ell must lie in [1, {self.d * self.d - 1}], got {self.ell}")
        if self.eps < 0 or self.c <= 0:
            raise InvalidParameter(f"need eps >= 0 and c > 0, got eps={self.eps}, c={self.c}")
        basis = gellmann_basis(self.d) if self.basis is None else tuple(np.asarray(v) for v in self.basis)
        validate_operator_basis(basis, self.d)
        object.__setattr__(self, "basis", basis)

    @property
    def scale(self) -> float:
        return self.c * self.eps / np.sqrt(self.d * self.ell)

    @property
    def perturbation_matrix(self) -> np.ndarray:
        """d^2 x ell matrix whose columns are vec(V_i)."""
        return np.stack([np.asarray(v).reshape(-1) for v in self.basis[: self.ell]], axis=1)

    def delta(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.ell,) or np.any(np.abs(z) != 1):
            raise InvalidParameter(f"z must be a vector of {self.ell} signs")
        return self.scale * np.tensordot(z, np.stack(self.basis[: self.ell]), axes=1)

    def a(self, z) -> float:
        norm = operator_norm(self.delta(z))
        return 1.0 if norm * self.d <= 1.0 else 1.0 / (self.d * norm)

    def clamped_delta(self, z) -> np.ndarray:
        return self.a(z) * self.delta(z)

    def rho(self, z) -> DensityMatrix:
        return DensityMatrix(np.eye(self.d) / self.d + self.clamped_delta(z))

    def all_signs(self) -> np.ndarray:
        """Every z in {+1, -1}^ell, one per row, in lexicographic order with +1 first."""
        if self.ell > CHI2_MAX_ELL:
            raise ResourceLimit("sign enumeration 2^ell", 2 ** self.ell, 2 ** CHI2_MAX_ELL, f"ell={self.ell}")
        return np.array(list(itertools.product((1.0, -1.0), repeat=self.ell)))


def hard_instance(d: int, ell: int, eps: float, basis, z, c: float = HARD_INSTANCE_C) -> DensityMatrix:
    return HardInstanceEnsemble(d, ell, eps, c, basis).rho(z)


def almost_eps_fraction(ensemble: HardInstanceEnsemble) -> float:
    """Fraction of z with ||rho_z - I/d||_1 >= eps (exhaustive)."""
    signs = ensemble.all_signs()
    far = sum(1 for z in signs if trace_norm(ensemble.clamped_delta(z)) >= ensemble.eps - ATOL)
    fraction = far / len(signs)
    logger.debug("almost-eps fraction d=%d ell=%d eps=%.3g: %.3f", ensemble.d, ensemble.ell, ensemble.eps, fraction)
    return fraction
