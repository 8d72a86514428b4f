"""
bucketing.py

Instance-dependent certification of rho against a known sigma.

sigma is diagonalized, its smallest eigenvalues are dropped as a tail of
mass at most eps^2/20, and the rest are grouped into dyadic buckets
S_j = {i : 2^-(j+1) < lambda_i <= 2^-j}. certify() then runs

    tail check       {Pi_tail, I - Pi_tail}, reject if the tail mass looks > eps^2/10
    mass pre-checks  {Pi, I - Pi} per bucket and bucket pair, mass within [1/2, 2] of sigma's
    diagonal tests   HS closeness of the normalized bucket blocks
    pair tests       HS closeness of the normalized blocks on S_j u S_j'

and accepts iff every check passes. Block copies are obtained by measuring
{Pi, I - Pi} and keeping the successes, so each block copy costs a
geometric number of copies of rho.
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eigh

from src.config import CERTIFY_DELTA, DEFAULT_PROFILE, EIG_CLAMP
from src.errors import ConstructionError, InvalidParameter, ShapeError
from src.estimators.sources import FixedSource, PtswSource
from src.qcore.states import HermitianOp, as_matrix
from src.testers.collision import TesterVerdict, hs_distance_estimate
from src.testers.mixedness import closeness_tcopy_batches

logger = logging.getLogger(__name__)

TAIL_FRACTION = 1.0 / 20.0
TAIL_REJECT_FRACTION = 1.0 / 10.0
MAX_HS_DISTANCE = math.sqrt(2.0)
UNREACHABLE_SCORE = 1.0e6


# =========================
# PLAN
# =========================

@dataclass(frozen=True)
class Bucket:
    label: int
    indices: tuple
    projector: np.ndarray
    dim: int
    mass: float


@dataclass(frozen=True)
class BucketPlan:
    """Tail, buckets and sub-test radii for one (sigma, eps)."""

    sigma_star: HermitianOp
    tail_set: tuple
    buckets: list
    pair_tests: list
    diag_tests: list
    eigenvalues: np.ndarray
    basis: np.ndarray
    eps: float
    tail_mass: float

    @property
    def m(self) -> int:
        return len(self.buckets)

    def bucket(self, label: int) -> Bucket:
        for bucket in self.buckets:
            if bucket.label == label:
                return bucket
        raise InvalidParameter(f"no bucket with label {label}")

    def tail_projector(self) -> np.ndarray:
        cols = self.basis[:, list(self.tail_set)]
        return cols @ cols.conj().T

    def indices(self, *labels) -> tuple:
        out = []
        for label in labels:
            out.extend(self.bucket(label).indices)
        return tuple(sorted(out))

    def sigma_block(self, indices) -> np.ndarray:
        """Normalized restriction of sigma to the eigenvectors in indices."""
        values = self.eigenvalues[list(indices)]
        return np.diag(values / values.sum()).astype(np.complex128)

    def rho_block(self, rho, indices):
        """(normalized block of rho in sigma's eigenbasis, its mass)."""
        cols = self.basis[:, list(indices)]
        block = cols.conj().T @ as_matrix(rho) @ cols
        block = (block + block.conj().T) / 2.0
        mass = float(np.real(np.trace(block)))
        if mass <= EIG_CLAMP:
            return None, mass
        return block / mass, min(mass, 1.0)

    def invariants(self) -> dict:
        """Exact structural checks: tail mass, in-bucket ratio, block operator norms, bucket count."""
        ratio_ok = all(
            self.eigenvalues[list(b.indices)].max() <= 2.0 * self.eigenvalues[list(b.indices)].min() + 1e-12
            for b in self.buckets
        )
        diag_norm_ok = all(
            np.max(np.real(np.diag(self.sigma_block(b.indices)))) <= 2.0 / b.dim + 1e-12 for b in self.buckets
        )
        pair_norm_ok = True
        for j, k, _ in self.pair_tests:
            a, b = self.bucket(j), self.bucket(k)
            smaller = min(a.dim, b.dim)
            pair_norm_ok &= np.max(np.real(np.diag(self.sigma_block(self.indices(j, k))))) <= 2.0 / smaller + 1e-12
        d = self.eigenvalues.size
        return {
            "tail_mass": self.tail_mass <= TAIL_FRACTION * self.eps ** 2 + 1e-12,
            "bucket_ratio": bool(ratio_ok),
            "diag_operator_norm": bool(diag_norm_ok),
            "pair_operator_norm": bool(pair_norm_ok),
            "bucket_count": self.m <= 4.0 * math.log2(max(d / self.eps, 1.0)) + 4.0,
        }


def _sorted_spectrum(sigma):
    matrix = as_matrix(sigma)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"sigma must be square, got {matrix.shape}")
    eigs, vecs = eigh(matrix)
    order = np.argsort(eigs)[::-1]
    return np.clip(eigs[order], 0.0, None), vecs[:, order]


def bucket_label(value: float) -> int:
    return int(math.floor(-math.log2(value) + 1e-12))


def bucket_plan(sigma, eps: float, diag_radius: float | None = None, pair_radius: float | None = None) -> BucketPlan:
    if not 0 < eps <= 2:
        raise InvalidParameter(f"eps must lie in (0, 2], got {eps}")
    constants = DEFAULT_PROFILE["constants"]
    diag_radius = constants["certify-diag-radius"] if diag_radius is None else diag_radius
    pair_radius = constants["certify-pair-radius"] if pair_radius is None else pair_radius
    eigs, vecs = _sorted_spectrum(sigma)
    d = eigs.size

    # Largest set of smallest eigenvalues with total mass <= eps^2 / 20
    budget = TAIL_FRACTION * eps ** 2 + 1e-12
    tail, mass = [], 0.0
    for index in range(d - 1, -1, -1):
        if mass + eigs[index] > budget:
            break
        mass += eigs[index]
        tail.append(index)
    tail = tuple(sorted(tail))
    kept = [i for i in range(d) if i not in set(tail)]

    groups = {}
    for index in kept:
        groups.setdefault(bucket_label(eigs[index]), []).append(index)

    buckets = []
    for label in sorted(groups):
        indices = tuple(groups[label])
        cols = vecs[:, list(indices)]
        buckets.append(
            Bucket(
                label=label,
                indices=indices,
                projector=cols @ cols.conj().T,
                dim=len(indices),
                mass=float(eigs[list(indices)].sum()),
            )
        )
    if len(buckets) > 4.0 * math.log2(max(d / eps, 1.0)) + 4.0:
        raise ConstructionError(f"{len(buckets)} buckets exceed the logarithmic bound for d={d}, eps={eps}")

    diag_tests = [(b.label, diag_radius * eps / (b.dim ** 1.5 * 2.0 ** -b.label)) for b in buckets]
    pair_tests = []
    for x, first in enumerate(buckets):
        for second in buckets[x + 1:]:
            big, small = (first, second) if first.dim >= second.dim else (second, first)
            spread = big.dim * 2.0 ** -big.label + small.dim * 2.0 ** -small.label
            pair_tests.append((first.label, second.label, pair_radius * eps / (math.sqrt(small.dim) * spread)))

    star = eigs.copy()
    star[list(tail)] = 0.0
    sigma_star = HermitianOp(vecs @ np.diag(star) @ vecs.conj().T)
    logger.debug("Bucket plan d=%d eps=%.3f: tail %s, buckets %s", d, eps, tail, [b.indices for b in buckets])
    return BucketPlan(
        sigma_star=sigma_star,
        tail_set=tail,
        buckets=buckets,
        pair_tests=pair_tests,
        diag_tests=diag_tests,
        eigenvalues=eigs,
        basis=vecs,
        eps=float(eps),
        tail_mass=float(mass),
    )


def instance_complexity(sigma, eps: float, t: int) -> float:
    """(1 + r/sqrt t)||s*||_{1/2}/eps^2 + ||s*||_{1/3}/(sqrt t eps^2) + r/eps^2, r = rank(s*)."""
    plan = bucket_plan(sigma, eps)
    kept = np.array([v for i, v in enumerate(plan.eigenvalues) if i not in set(plan.tail_set) and v > EIG_CLAMP])
    rank = kept.size
    half = float(np.sum(np.sqrt(kept)) ** 2)
    third = float(np.sum(np.cbrt(kept)) ** 3)
    root_t = math.sqrt(t)
    return (1.0 + rank / root_t) * half / eps ** 2 + third / (root_t * eps ** 2) + rank / eps ** 2


# =========================
# SUB-TESTS
# =========================

@dataclass
class SubTest:
    """Outcome of one check; score <= 1 (or < 1 for HS tests) means it passed."""

    name: str
    kind: str
    passed: bool
    score: float
    copies: int
    details: dict = field(default_factory=dict)


def _repetitions(delta: float, constant: float) -> int:
    reps = max(1, math.ceil(constant * math.log(1.0 / delta)))
    return reps if reps % 2 else reps + 1


def _mass_check(name: str, projector: np.ndarray, rho: np.ndarray, expected: float, delta: float, constant: float, rng) -> SubTest:
    shots = math.ceil(constant * math.log(1.0 / delta) / expected)
    p = float(np.clip(np.real(np.trace(projector @ rho)), 0.0, 1.0))
    hits = int(rng.binomial(shots, p))
    estimate = max(hits, 0.5) / shots
    score = abs(math.log2(estimate / expected))
    return SubTest(name, "precheck", score <= 1.0, score, shots, {"estimate": hits / shots, "expected": expected})


def _tail_check(plan: BucketPlan, rho: np.ndarray, delta: float, constant: float, rng) -> SubTest:
    shots = math.ceil(constant * math.log(1.0 / delta) / plan.eps ** 2)
    p = float(np.clip(np.real(np.trace(plan.tail_projector() @ rho)), 0.0, 1.0))
    estimate = rng.binomial(shots, p) / shots
    score = estimate / (TAIL_REJECT_FRACTION * plan.eps ** 2)
    return SubTest("tail", "tail", score <= 1.0, float(score), shots, {"estimate": float(estimate)})


def _block_hs_test(name: str, kind: str, plan: BucketPlan, rho, indices, radius: float, t: int, delta: float, constants: dict, rng) -> SubTest:
    dim = len(indices)
    if dim == 1:
        return SubTest(name, kind, True, 0.0, 0, {"trivial": "one-dimensional block"})
    if radius >= MAX_HS_DISTANCE:
        return SubTest(name, kind, True, 0.0, 0, {"trivial": "radius exceeds the largest HS distance"})
    block, mass = plan.rho_block(rho, indices)
    if block is None:
        return SubTest(name, kind, False, UNREACHABLE_SCORE, 0, {"mass": mass})
    t_block = min(int(t), dim * dim)
    n = closeness_tcopy_batches(dim, t_block, radius, constants["certify-hs"])
    reps = _repetitions(delta, constants["certify-repetitions"])
    rho_source = PtswSource(block, t_block)
    sigma_source = FixedSource(plan.sigma_block(indices), copies_per_sample=0)
    values, block_copies = [], 0
    for _ in range(reps):
        report = hs_distance_estimate(rho_source, sigma_source, n, rng)
        values.append(report.statistic)
        block_copies += report.details["copies_rho"]
    # Copies of rho that failed the {Pi, I - Pi} filter before each success
    wasted = int(rng.negative_binomial(block_copies, mass)) if mass < 1.0 else 0
    threshold = radius ** 2 / 2.0
    statistic = float(np.median(values))
    return SubTest(
        name,
        kind,
        statistic < threshold,
        statistic / threshold,
        block_copies + wasted,
        {"statistic": statistic, "threshold": threshold, "radius": radius, "n": n, "reps": reps, "t": t_block},
    )


# =========================
# CERTIFY
# =========================

def certify(sigma, rho, eps: float, t: int, rng: np.random.Generator, delta: float = CERTIFY_DELTA, profile: dict | None = None) -> TesterVerdict:
    """Certify rho == sigma versus ||rho - sigma||_1 >= eps from copies of rho."""
    if t < 1:
        raise InvalidParameter(f"t must be >= 1, got {t}")
    if not 0 < delta < 1:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    constants = dict(DEFAULT_PROFILE["constants"])
    if profile:
        constants.update(profile.get("constants", {}))
    plan = bucket_plan(sigma, eps, constants["certify-diag-radius"], constants["certify-pair-radius"])
    matrix = np.array(as_matrix(rho))
    if matrix.shape != plan.basis.shape:
        raise ShapeError(f"rho has shape {matrix.shape}, sigma has {plan.basis.shape}")
    m = plan.m
    delta_bucket = delta / (6.0 * m)
    delta_pair = delta / (6.0 * m * m)

    checks = []

    def run(check: SubTest) -> bool:
        checks.append(check)
        return check.passed

    ok = True
    if plan.tail_set:
        ok = run(_tail_check(plan, matrix, delta / 3.0, constants["certify-tail"], rng))
    for bucket in plan.buckets if ok else []:
        ok = run(_mass_check(f"mass[{bucket.label}]", bucket.projector, matrix, bucket.mass, delta_bucket, constants["certify-precheck"], rng))
        if not ok:
            break
    for j, k, _ in plan.pair_tests if ok else []:
        first, second = plan.bucket(j), plan.bucket(k)
        ok = run(
            _mass_check(
                f"mass[{j},{k}]",
                first.projector + second.projector,
                matrix,
                first.mass + second.mass,
                delta_pair,
                constants["certify-precheck"],
                rng,
            )
        )
        if not ok:
            break
    for label, radius in plan.diag_tests if ok else []:
        ok = run(_block_hs_test(f"diag[{label}]", "diag", plan, matrix, plan.bucket(label).indices, radius, t, delta_bucket, constants, rng))
        if not ok:
            break
    for j, k, radius in plan.pair_tests if ok else []:
        ok = run(_block_hs_test(f"pair[{j},{k}]", "pair", plan, matrix, plan.indices(j, k), radius, t, delta_pair, constants, rng))
        if not ok:
            break

    statistic = max((c.score for c in checks), default=0.0)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        logger.debug("certify rejected at %s", failed[0])
    return TesterVerdict(
        accept=ok,
        statistic=float(statistic),
        threshold=1.0,
        copies_used=sum(c.copies for c in checks),
        n_batches=sum(c.details.get("n", 0) * c.details.get("reps", 0) for c in checks),
        t=int(t),
        details={
            "buckets": [list(b.indices) for b in plan.buckets],
            "tail": list(plan.tail_set),
            "checks": [asdict(c) for c in checks],
            "precheck_failures": [c.name for c in checks if c.kind == "precheck" and not c.passed],
            "instance_complexity": instance_complexity(sigma, eps, t),
        },
    )
