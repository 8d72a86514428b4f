"""
operators.py

Tensor-product plumbing on dense matrices: permutation operators, the
symmetric subspace, partial traces, Schatten norms and distances.

Register convention: a permutation is a tuple pi with pi[k] = pi(k) on
0-based registers, and V(pi)|i_0, ..., i_{n-1}> = |i_{pi^-1(0)}, ..., i_{pi^-1(n-1)}>,
so V(pi) V(tau) = V(pi tau).
"""

from functools import lru_cache, reduce
from math import comb, prod

import numpy as np

from src.config import EIG_CLAMP, dim_cap
from src.errors import InvalidParameter, ResourceLimit, ShapeError
from src.qcore.states import HermitianOp, as_matrix


# =========================
# TENSOR PRODUCTS
# =========================

def kron_all(ops) -> np.ndarray:
    return reduce(np.kron, [as_matrix(op) for op in ops])


def kron_power(op, n: int) -> np.ndarray:
    """n-fold tensor power; n = 0 gives the 1x1 identity."""
    if n < 0:
        raise InvalidParameter(f"tensor power must be >= 0, got {n}")
    if n == 0:
        return np.ones((1, 1), dtype=np.complex128)
    return kron_all([op] * n)


def check_cap(size: int, what: str, cap: int | None = None):
    cap = dim_cap() if cap is None else cap
    if size > cap:
        raise ResourceLimit(what, size, cap)


# =========================
# PERMUTATIONS
# =========================

def _validate_permutation(pi) -> tuple:
    pi = tuple(int(p) for p in pi)
    if len(pi) < 1 or sorted(pi) != list(range(len(pi))):
        raise InvalidParameter(f"not a permutation of 0..n-1: {pi}")
    return pi


def inverse_permutation(pi) -> tuple:
    pi = _validate_permutation(pi)
    inv = [0] * len(pi)
    for k, p in enumerate(pi):
        inv[p] = k
    return tuple(inv)


def compose(pi, tau) -> tuple:
    """(pi tau)(k) = pi(tau(k))."""
    return tuple(pi[t] for t in tau)


def permutation_indices(pi, d: int) -> np.ndarray:
    """Column index of the single 1 in each row of V(pi)."""
    pi_inv = inverse_permutation(pi)
    n = len(pi_inv)
    idx = np.arange(d ** n).reshape((d,) * n)
    return np.transpose(idx, pi_inv).reshape(-1)


def permutation_operator(pi, d: int) -> np.ndarray:
    """0/1 matrix of V_d(pi) on (C^d)^{tensor n}."""
    perm_idx = permutation_indices(pi, d)
    size = perm_idx.size
    check_cap(size, f"permutation operator d={d}, n={len(pi)}")
    out = np.zeros((size, size), dtype=np.complex128)
    out[np.arange(size), perm_idx] = 1.0
    return out


def swap_operator(d: int) -> np.ndarray:
    return permutation_operator((1, 0), d)


def permute_registers(op, dims, order) -> np.ndarray:
    """Reorder registers so that new register k is old register order[k]."""
    matrix = as_matrix(op)
    dims = [int(x) for x in dims]
    n = len(dims)
    order = _validate_permutation(order)
    if len(order) != n:
        raise ShapeError(f"order has {len(order)} entries for {n} registers")
    total = prod(dims)
    if matrix.shape != (total, total):
        raise ShapeError(f"operator shape {matrix.shape} does not match dims {dims}")
    tensor = matrix.reshape(dims + dims)
    axes = list(order) + [n + k for k in order]
    new_total = prod(dims[k] for k in order)
    return tensor.transpose(axes).reshape(new_total, new_total)


# =========================
# SYMMETRIC SUBSPACE
# =========================

def sym_dimension(d: int, n: int) -> int:
    """d[n] = C(d+n-1, n)."""
    return comb(d + n - 1, n)


@lru_cache(maxsize=64)
def symmetric_basis(d: int, n: int) -> np.ndarray:
    """Isometry B (d^n x d[n]) with B B^dag = symmetric projector.

    Columns are normalized occupation-number states, ordered by
    numpy.unique on the occupation vectors.
    """
    if d < 1 or n < 1:
        raise InvalidParameter(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    check_cap(d ** n, f"symmetric basis d={d}, n={n}", cap=4 * dim_cap())
    digits = np.indices((d,) * n).reshape(n, -1).T
    counts = np.stack([(digits == a).sum(axis=1) for a in range(d)], axis=1)
    _, inverse = np.unique(counts, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    basis = np.zeros((d ** n, sym_dimension(d, n)), dtype=np.complex128)
    basis[np.arange(d ** n), inverse] = 1.0
    basis /= np.sqrt(basis.sum(axis=0, keepdims=True).real)
    basis.setflags(write=False)
    return basis


def symmetric_projector(d: int, n: int) -> HermitianOp:
    check_cap(d ** n, f"symmetric projector d={d}, n={n}")
    basis = symmetric_basis(d, n)
    return HermitianOp(basis @ basis.conj().T)


# =========================
# PARTIAL TRACE
# =========================

def partial_trace(op, dims, keep) -> np.ndarray:
    """Trace out every register not listed in keep (kept in ascending order)."""
    matrix = as_matrix(op)
    dims = [int(x) for x in dims]
    n = len(dims)
    total = prod(dims)
    if matrix.ndim != 2 or matrix.shape != (total, total):
        raise ShapeError(f"operator shape {matrix.shape} does not match dims {dims} (product {total})")
    keep = sorted({int(k) for k in keep})
    if any(k < 0 or k >= n for k in keep):
        raise ShapeError(f"keep {keep} out of range for {n} registers")
    traced = [k for k in range(n) if k not in keep]
    kept_dim = prod(dims[k] for k in keep)
    traced_dim = prod(dims[k] for k in traced)
    tensor = matrix.reshape(dims + dims)
    axes = keep + traced + [n + k for k in keep] + [n + k for k in traced]
    tensor = tensor.transpose(axes).reshape(kept_dim, traced_dim, kept_dim, traced_dim)
    return np.einsum("atbt->ab", tensor)


# =========================
# NORMS AND DISTANCES
# =========================

def singular_values(op) -> np.ndarray:
    values = np.linalg.svd(as_matrix(op), compute_uv=False)
    values[values < EIG_CLAMP] = 0.0
    return values


def schatten(op, p: float) -> float:
    """Schatten p-norm (quasinorm for p < 1); p = inf gives the operator norm."""
    if not p > 0:
        raise InvalidParameter(f"Schatten index must be > 0, got {p}")
    values = singular_values(op)
    if np.isinf(p):
        return float(values.max(initial=0.0))
    return float(np.sum(values ** p) ** (1.0 / p))


def trace_norm(op) -> float:
    return schatten(op, 1.0)


def hs_norm(op) -> float:
    return float(np.linalg.norm(as_matrix(op)))


def operator_norm(op) -> float:
    return schatten(op, np.inf)


def trace_distance(a, b) -> float:
    """||a - b||_1 (no factor 1/2)."""
    return trace_norm(as_matrix(a) - as_matrix(b))


def hs_distance(a, b) -> float:
    return hs_norm(as_matrix(a) - as_matrix(b))


def purity(rho) -> float:
    matrix = as_matrix(rho)
    return float(np.real(np.vdot(matrix.conj().T, matrix)))


def hs_inner(a, b) -> complex:
    """tr(a^dag b)."""
    return complex(np.vdot(as_matrix(a), as_matrix(b)))


# =========================
# OPERATOR BASES
# =========================

@lru_cache(maxsize=16)
def gellmann_basis(d: int) -> tuple:
    """Orthonormal Hermitian basis of d x d matrices; the last element is I/sqrt(d).

    Order: symmetric off-diagonal, antisymmetric off-diagonal, traceless diagonal, identity.
    """
    if d < 1:
        raise InvalidParameter(f"dimension must be >= 1, got {d}")
    basis = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=np.complex128)
            sym[j, k] = sym[k, j] = 1.0 / np.sqrt(2.0)
            basis.append(sym)
    for j in range(d):
        for k in range(j + 1, d):
            anti = np.zeros((d, d), dtype=np.complex128)
            anti[j, k] = -1j / np.sqrt(2.0)
            anti[k, j] = 1j / np.sqrt(2.0)
            basis.append(anti)
    for level in range(1, d):
        diag = np.zeros(d, dtype=np.float64)
        diag[:level] = 1.0
        diag[level] = -float(level)
        basis.append(np.diag(diag / np.sqrt(level * (level + 1))).astype(np.complex128))
    basis.append(np.eye(d, dtype=np.complex128) / np.sqrt(d))
    for element in basis:
        element.setflags(write=False)
    return tuple(basis)


def sos_coefficients(op, d: int) -> np.ndarray:
    """c_ij = tr(op (V_i tensor V_j)) in the Gell-Mann basis."""
    matrix = as_matrix(op)
    if matrix.shape != (d * d, d * d):
        raise ShapeError(f"expected a {d * d} x {d * d} operator, got {matrix.shape}")
    basis = np.stack(gellmann_basis(d))
    tensor = matrix.reshape(d, d, d, d)
    # tr(M (A tensor B)) = sum M[(a,b),(c,e)] A[c,a] B[e,b]
    return np.einsum("abce,ica,jeb->ij", tensor, basis, basis)


def in_sos_cone(op, d: int, atol: float = 1e-9) -> bool:
    """True iff op = sum_k B_k tensor B_k for Hermitian B_k (coefficient matrix real symmetric PSD)."""
    coeffs = sos_coefficients(op, d)
    if np.max(np.abs(coeffs.imag)) > atol:
        return False
    real = coeffs.real
    if np.max(np.abs(real - real.T)) > atol:
        return False
    return bool(np.min(np.linalg.eigvalsh((real + real.T) / 2.0)) >= -atol)
