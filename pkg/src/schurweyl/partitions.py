"""
partitions.py

Integer partitions and symmetric-group character theory: enumeration,
hook-length dimensions, Murnaghan-Nakayama characters, cycle types,
contents and GL(d) dimensions.
"""

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, prod

from src.errors import InvalidParameter


# =========================
# PARTITION TYPE
# =========================

@dataclass(frozen=True, order=True)
class Partition:
    """Weakly decreasing tuple of positive integers."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p < 1 for p in parts):
            raise InvalidParameter(f"partition parts must be positive: {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise InvalidParameter(f"partition parts must be weakly decreasing: {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def t(self) -> int:
        return sum(self.parts)

    def length(self) -> int:
        return len(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.parts) + ")"

    def transpose(self) -> "Partition":
        if not self.parts:
            return Partition(())
        return Partition(tuple(sum(1 for p in self.parts if p > j) for j in range(self.parts[0])))

    def cells(self):
        """(row, column) pairs of the Young diagram, row-major."""
        return [(i, j) for i, row in enumerate(self.parts) for j in range(row)]

    def hook_lengths(self) -> list:
        conj = self.transpose().parts
        return [(self.parts[i] - j) + (conj[j] - i) - 1 for i, j in self.cells()]

    @classmethod
    def parse(cls, text: str) -> "Partition":
        """Parse "(2,1)", "2,1" or "2 1"."""
        cleaned = text.strip().strip("()[]").replace(",", " ")
        return cls(tuple(int(tok) for tok in cleaned.split()))


def as_partition(value) -> Partition:
    if isinstance(value, Partition):
        return value
    if isinstance(value, str):
        return Partition.parse(value)
    return Partition(tuple(value))


# =========================
# ENUMERATION
# =========================

def _partitions_bounded(n: int, max_part: int):
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in _partitions_bounded(n - first, first):
            yield (first,) + rest


@lru_cache(maxsize=32)
def _partitions_cached(t: int) -> tuple:
    return tuple(Partition(p) for p in _partitions_bounded(t, t))


def partitions(t: int) -> list:
    """All partitions of t in lexicographic-descending order."""
    if t < 1:
        raise InvalidParameter(f"t must be >= 1, got {t}")
    return list(_partitions_cached(t))


# =========================
# DIMENSIONS
# =========================

def irrep_dimension(lam) -> int:
    """Dimension of the S_t irrep labelled lam (hook-length formula)."""
    lam = as_partition(lam)
    return factorial(lam.t) // prod(lam.hook_lengths())


def contents(lam) -> list:
    lam = as_partition(lam)
    return [j - i for i, j in lam.cells()]


def content_sum(lam) -> int:
    """Eigenvalue of the sum of all transpositions on the lam isotypic block."""
    return sum(contents(lam))


def gl_dimension(lam, d: int) -> int:
    """Dimension of the GL(d) irrep labelled lam (hook-content formula); 0 if len(lam) > d."""
    lam = as_partition(lam)
    numerator = prod(d + c for c in contents(lam))
    if numerator <= 0:
        return 0
    return numerator // prod(lam.hook_lengths())


# =========================
# CYCLE TYPES
# =========================

def cycle_type(pi) -> Partition:
    pi = tuple(pi)
    seen = [False] * len(pi)
    lengths = []
    for start in range(len(pi)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = pi[k]
            length += 1
        lengths.append(length)
    return Partition(tuple(sorted(lengths, reverse=True)))


def class_size(mu) -> int:
    """Number of permutations with cycle type mu."""
    mu = as_partition(mu)
    counts = Counter(mu.parts)
    return factorial(mu.t) // prod(k ** m * factorial(m) for k, m in counts.items())


def cycle_type_sign(mu) -> int:
    mu = as_partition(mu)
    return -1 if (mu.t - mu.length()) % 2 else 1


# =========================
# CHARACTERS
# =========================

@lru_cache(maxsize=None)
def _murnaghan_nakayama(lam: tuple, mu: tuple) -> int:
    if not mu:
        return 1 if not lam else 0
    k, rest = mu[0], mu[1:]
    ell = len(lam)
    beta = [lam[i] + ell - 1 - i for i in range(ell)]
    present = set(beta)
    total = 0
    for b in beta:
        nb = b - k
        if nb < 0 or nb in present:
            continue
        # rim hook removal is a beta-number shift; sign from the leg length
        sign = -1 if sum(1 for c in beta if nb < c < b) % 2 else 1
        new_beta = sorted([c for c in beta if c != b] + [nb], reverse=True)
        size = len(new_beta)
        new_lam = tuple(x - (size - 1 - i) for i, x in enumerate(new_beta))
        total += sign * _murnaghan_nakayama(tuple(p for p in new_lam if p > 0), rest)
    return total


def character(lam, cycle_type_mu) -> int:
    """chi^lam evaluated on any permutation of the given cycle type."""
    lam = as_partition(lam)
    mu = as_partition(cycle_type_mu)
    if lam.t != mu.t:
        raise InvalidParameter(f"partitions of different sizes: {lam} has t={lam.t}, {mu} has t={mu.t}")
    return _murnaghan_nakayama(lam.parts, mu.parts)
