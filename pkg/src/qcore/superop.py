"""
superop.py

Linear maps on operators in the Liouville representation,
vec(Phi(X)) = S vec(X) with row-major vec.
"""

from dataclasses import dataclass

import numpy as np

from src.config import POVM_ATOL
from src.errors import ShapeError
from src.qcore.states import as_matrix


@dataclass(frozen=True)
class Superoperator:
    """Liouville matrix of a map from in_dim x in_dim to out_dim x out_dim operators."""

    liouville: np.ndarray
    in_dim: int
    out_dim: int

    def __post_init__(self):
        matrix = np.array(self.liouville, dtype=np.complex128, copy=True)
        if matrix.shape != (self.out_dim ** 2, self.in_dim ** 2):
            raise ShapeError(
                f"Liouville matrix shape {matrix.shape} does not match dims {self.in_dim} -> {self.out_dim}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "liouville", matrix)

    @classmethod
    def from_map(cls, func, in_dim: int, out_dim: int | None = None) -> "Superoperator":
        """Tabulate func on the matrix units E_ij."""
        out_dim = in_dim if out_dim is None else out_dim
        columns = np.zeros((out_dim ** 2, in_dim ** 2), dtype=np.complex128)
        for i in range(in_dim):
            for j in range(in_dim):
                unit = np.zeros((in_dim, in_dim), dtype=np.complex128)
                unit[i, j] = 1.0
                columns[:, i * in_dim + j] = np.asarray(func(unit)).reshape(-1)
        return cls(columns, in_dim, out_dim)

    @property
    def dim(self) -> int:
        return self.in_dim

    def apply(self, op) -> np.ndarray:
        matrix = as_matrix(op)
        if matrix.shape != (self.in_dim, self.in_dim):
            raise ShapeError(f"expected a {self.in_dim} x {self.in_dim} input, got {matrix.shape}")
        return (self.liouville @ matrix.reshape(-1)).reshape(self.out_dim, self.out_dim)

    def choi(self) -> np.ndarray:
        """J = sum_ij |i><j| tensor Phi(|i><j|)."""
        tensor = self.liouville.reshape(self.out_dim, self.out_dim, self.in_dim, self.in_dim)
        size = self.in_dim * self.out_dim
        return tensor.transpose(2, 0, 3, 1).reshape(size, size)

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvals(self.liouville)

    def trace(self) -> complex:
        return complex(np.trace(self.liouville))

    def is_unital(self, atol: float = POVM_ATOL) -> bool:
        return self.in_dim == self.out_dim and bool(
            np.allclose(self.apply(np.eye(self.in_dim)), np.eye(self.out_dim), atol=atol)
        )

    def is_trace_preserving(self, atol: float = POVM_ATOL) -> bool:
        # tr Phi(E_ij) = delta_ij
        traces = np.einsum("aaij->ij", self.liouville.reshape(self.out_dim, self.out_dim, self.in_dim, self.in_dim))
        return bool(np.allclose(traces, np.eye(self.in_dim), atol=atol))

    def is_completely_positive(self, atol: float = 1e-8) -> bool:
        choi = self.choi()
        return bool(np.min(np.linalg.eigvalsh((choi + choi.conj().T) / 2.0)) >= -atol)
