"""
moments.py

Exact moments of Hayashi-POVM outcomes from the Haar moment of the
enlarged symmetric subspace, used as an oracle for every closed form.
"""

import numpy as np

from src.config import SUPPORT_ATOL, oracle_dim_cap
from src.errors import InvalidParameter, PreconditionError, ShapeError
from src.qcore.operators import check_cap, sym_dimension, symmetric_basis
from src.qcore.states import HermitianOp, as_matrix


def infer_copies(size: int, local_dim: int) -> int:
    """n with local_dim ** n == size."""
    if local_dim < 1:
        raise InvalidParameter(f"local dimension must be >= 1, got {local_dim}")
    if local_dim == 1:
        if size != 1:
            raise ShapeError(f"size {size} is not a power of 1")
        return 1
    n = int(round(np.log(size) / np.log(local_dim)))
    if n < 1 or local_dim ** n != size:
        raise ShapeError(f"size {size} is not a positive power of {local_dim}")
    return n


def symmetric_support_violation(psi, local_dim: int) -> float:
    """Frobenius distance between psi and its compression to the symmetric subspace."""
    matrix = as_matrix(psi)
    n = infer_copies(matrix.shape[0], local_dim)
    basis = symmetric_basis(local_dim, n)
    compressed = basis @ (basis.conj().T @ matrix @ basis) @ basis.conj().T
    return float(np.linalg.norm(compressed - matrix))


def haar_moment_oracle(psi_sym, local_dim: int, k: int) -> HermitianOp:
    """k-th moment of a Hayashi outcome on psi_sym, exactly.

    Evaluates D[n] tr_{1..n}(Pi_sym^{n+k} (psi_sym tensor I^{k})) / D[n+k].
    """
    if k not in (1, 2):
        raise InvalidParameter(f"moment order must be 1 or 2, got {k}")
    psi = as_matrix(psi_sym)
    n = infer_copies(psi.shape[0], local_dim)
    check_cap(local_dim ** (n + k), f"Haar moment oracle D={local_dim}, n={n}, k={k}", cap=oracle_dim_cap())
    violation = symmetric_support_violation(psi, local_dim)
    if violation > SUPPORT_ATOL:
        raise PreconditionError(f"state is not supported on the symmetric subspace (violation {violation:.3e})")
    basis = symmetric_basis(local_dim, n + k).reshape(local_dim ** n, local_dim ** k, -1)
    weighted = np.einsum("ji,ias->jas", psi, basis)
    moment = np.einsum("jas,jbs->ab", weighted, basis.conj())
    moment *= sym_dimension(local_dim, n) / sym_dimension(local_dim, n + k)
    return HermitianOp((moment + moment.conj().T) / 2.0)
