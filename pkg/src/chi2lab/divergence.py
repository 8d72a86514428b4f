"""
divergence.py

Exact chi-square divergences between the hard-instance mixture and the
maximally mixed state under a non-adaptive schedule of rank-one POVMs, and
the quantities used to bound them:

    chi2      = sum_x (E_z P_z(x))^2 / P_mm(x) - 1          (full enumeration)
    IS bound  = E_{z,z'} exp(sum_i phi_i(z, z')) - 1,   phi_i = E_{x~q_i}[delta_z delta_z']
    phi_i     = d^t tr(Delta_z^(t) H_i(Delta_z'^(t)))         (Lueders route)

Enumerations over z are split into CHI2_PARTITIONS contiguous ranges and
run on joblib threads; partial sums are combined in range order.
"""

# =========================
# IMPORTS
# =========================

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.linalg import eigh

from src.config import CHI2_MAX_ELL, CHI2_MAX_OUTCOMES, CHI2_MAX_ROUNDS, CHI2_PARTITIONS, HARD_INSTANCE_C, dim_cap
from src.errors import InvalidParameter, ResourceLimit, ShapeError
from src.qcore.operators import check_cap, gellmann_basis, kron_power
from src.qcore.superop import Superoperator
from src.chi2lab.channels import (
    RankOnePovm,
    induced_channel,
    lueders_channel,
    outcome_distribution,
    random_rank_one_povm,
)
from src.chi2lab.instances import HardInstanceEnsemble

logger = logging.getLogger(__name__)


# =========================
# BUDGETS AND PARTITIONS
# =========================

def _expand_schedule(schedule, n: int) -> list:
    schedule = list(schedule)
    if len(schedule) == 1:
        schedule = schedule * n
    if len(schedule) != n:
        raise InvalidParameter(f"schedule has {len(schedule)} POVMs for n={n} rounds")
    return schedule


def _check_budget(ensemble: HardInstanceEnsemble, schedule: list, n: int, t: int):
    if ensemble.ell > CHI2_MAX_ELL:
        raise ResourceLimit("sign enumeration 2^ell", 2 ** ensemble.ell, 2 ** CHI2_MAX_ELL, f"ell={ensemble.ell}")
    if n > CHI2_MAX_ROUNDS:
        raise ResourceLimit("measurement rounds", n, CHI2_MAX_ROUNDS)
    for povm in schedule:
        if povm.outcomes > CHI2_MAX_OUTCOMES:
            raise ResourceLimit("POVM outcomes", povm.outcomes, CHI2_MAX_OUTCOMES)
        if povm.dim != ensemble.d ** t:
            raise ShapeError(f"POVM acts on dimension {povm.dim}, expected d^t = {ensemble.d ** t}")


def _ranges(total: int, parts: int) -> list:
    bounds = np.linspace(0, total, min(parts, total) + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def _partitioned(func, total: int) -> list:
    """Evaluate func(start, stop) on contiguous ranges with joblib threads, in range order."""
    return Parallel(n_jobs=CHI2_PARTITIONS, backend="threading")(
        delayed(func)(start, stop) for start, stop in _ranges(total, CHI2_PARTITIONS)
    )


def round_distributions(ensemble: HardInstanceEnsemble, schedule: list, t: int):
    """(per-round 2^ell x K arrays of p_z, per-round baseline q)."""
    signs = ensemble.all_signs()
    states = [ensemble.rho(z) for z in signs]
    mixed = np.eye(ensemble.d) / ensemble.d
    probs = [np.stack([outcome_distribution(povm, rho, t) for rho in states]) for povm in schedule]
    base = [outcome_distribution(povm, mixed, t) for povm in schedule]
    return probs, base


# =========================
# EXACT CHI-SQUARE
# =========================

def chi2_exact(ensemble: HardInstanceEnsemble, schedule, n: int, t: int) -> float:
    """chi^2(E_z P_z^(n) || P_mm^(n)) by enumerating every z and every joint outcome."""
    schedule = _expand_schedule(schedule, n)
    _check_budget(ensemble, schedule, n, t)
    probs, base = round_distributions(ensemble, schedule, t)
    num_z = probs[0].shape[0]

    def joint(row):
        out = probs[0][row]
        for i in range(1, n):
            out = np.multiply.outer(out, probs[i][row])
        return out

    def partial(start, stop):
        return np.sum(np.stack([joint(row) for row in range(start, stop)]), axis=0)

    mixture = np.sum(np.stack(_partitioned(partial, num_z)), axis=0) / num_z
    baseline = base[0]
    for i in range(1, n):
        baseline = np.multiply.outer(baseline, base[i])
    support = baseline > 0
    value = float(np.sum(mixture[support] ** 2 / baseline[support])) - 1.0
    logger.debug("chi2 d=%d ell=%d n=%d t=%d: %.6e", ensemble.d, ensemble.ell, n, t, value)
    return max(value, 0.0)


# =========================
# INGSTER-SUSLINA
# =========================

def phi_matrix(ensemble: HardInstanceEnsemble, povm: RankOnePovm, t: int, probs: np.ndarray | None = None) -> np.ndarray:
    """phi(z, z') = sum_x p_z(x) p_z'(x) / q(x) - 1 over all sign pairs."""
    if probs is None:
        probs = np.stack([outcome_distribution(povm, ensemble.rho(z), t) for z in ensemble.all_signs()])
    base = outcome_distribution(povm, np.eye(ensemble.d) / ensemble.d, t)
    support = base > 0
    scaled = probs[:, support] / np.sqrt(base[support])[np.newaxis, :]
    return scaled @ scaled.T - 1.0


def ingster_suslina_bound(ensemble: HardInstanceEnsemble, schedule, n: int, t: int) -> float:
    schedule = _expand_schedule(schedule, n)
    _check_budget(ensemble, schedule, n, t)
    probs, _ = round_distributions(ensemble, schedule, t)
    exponent = sum(phi_matrix(ensemble, povm, t, p) for povm, p in zip(schedule, probs))

    def partial(start, stop):
        return np.sum(np.exp(exponent[start:stop]))

    total = float(np.sum(_partitioned(partial, exponent.shape[0])))
    return total / exponent.size - 1.0


def tensor_deviation(ensemble: HardInstanceEnsemble, z, t: int) -> np.ndarray:
    """Delta_z^(t) = rho_z^{tensor t} - (I/d)^{tensor t}."""
    return kron_power(np.asarray(ensemble.rho(z)), t) - kron_power(np.eye(ensemble.d) / ensemble.d, t)


def phi_lueders(ensemble: HardInstanceEnsemble, povm: RankOnePovm, t: int, z, z_prime) -> float:
    channel = lueders_channel(povm)
    left, right = tensor_deviation(ensemble, z, t), tensor_deviation(ensemble, z_prime, t)
    return float(ensemble.d ** t * np.real(np.trace(left @ channel.apply(right))))


# =========================
# LINEARIZATION
# =========================

@dataclass(frozen=True)
class LinearizedTerms:
    """tr(X H(Y)) for X, Y in {linear part L, higher-order part H} of Delta^(t)."""

    ll: float
    lh: float
    hl: float
    hh: float
    total: float

    @property
    def nonlinear(self) -> float:
        return self.lh + self.hl + self.hh

    @property
    def ratio(self) -> float:
        """|non-linear| / |linear|; nan when the linear term vanishes."""
        return abs(self.nonlinear) / abs(self.ll) if self.ll else float("nan")

    def to_dict(self) -> dict:
        return {
            "ll": self.ll,
            "lh": self.lh,
            "hl": self.hl,
            "hh": self.hh,
            "total": self.total,
            "nonlinear": self.nonlinear,
            "linear_nonlinear_ratio": self.ratio,
        }


def linear_part(ensemble: HardInstanceEnsemble, z, t: int) -> np.ndarray:
    """sum_k (I/d)^{k} tensor clamped Delta_z tensor (I/d)^{t-k-1}."""
    mixed = np.eye(ensemble.d) / ensemble.d
    delta = ensemble.clamped_delta(z)
    return sum(np.kron(np.kron(kron_power(mixed, k), delta), kron_power(mixed, t - k - 1)) for k in range(t))


def linearized_terms(ensemble: HardInstanceEnsemble, channel: Superoperator, z, z_prime, t: int) -> LinearizedTerms:
    check_cap(ensemble.d ** t, f"linearization d={ensemble.d}, t={t}", cap=dim_cap())
    if channel.in_dim != ensemble.d ** t:
        raise ShapeError(f"channel acts on dimension {channel.in_dim}, expected {ensemble.d ** t}")
    lin_a, lin_b = linear_part(ensemble, z, t), linear_part(ensemble, z_prime, t)
    high_a = tensor_deviation(ensemble, z, t) - lin_a
    high_b = tensor_deviation(ensemble, z_prime, t) - lin_b

    def pair(x, y):
        return float(np.real(np.trace(x @ channel.apply(y))))

    terms = (pair(lin_a, lin_b), pair(lin_a, high_b), pair(high_a, lin_b), pair(high_a, high_b))
    total = pair(lin_a + high_a, lin_b + high_b)
    return LinearizedTerms(*terms, total=total)


# =========================
# ADVERSARIAL BASIS
# =========================

@dataclass(frozen=True, eq=False)
class AdversarialBasis:
    basis: tuple
    eigenvalues: np.ndarray
    ell: int
    projected_norm: float


def projected_norm(channel: Superoperator, basis, ell: int) -> float:
    """||V^dag S V||_2 for V = [vec(V_1), ..., vec(V_ell)]."""
    v = np.stack([np.asarray(b).reshape(-1) for b in basis[:ell]], axis=1)
    return float(np.linalg.norm(v.conj().T @ channel.liouville @ v))


def adversarial_basis(channel: Superoperator, ell: int, smallest: bool = True) -> AdversarialBasis:
    """The ell smallest-eigenvalue Hermitian eigenvectors of the channel on traceless operators.

    Ties are broken by (eigenvalue, real part of the vectorized eigenvector) and
    every eigenvector's first non-negligible coefficient is made positive.
    """
    d = channel.in_dim
    if not 1 <= ell <= d * d - 1:
        raise InvalidParameter(f"ell must lie in [1, {d * d - 1}], got {ell}")
    traceless = gellmann_basis(d)[:-1]
    flat = np.stack([g.reshape(-1) for g in traceless], axis=1)
    restricted = np.real(flat.conj().T @ channel.liouville @ flat)
    eigs, vecs = eigh((restricted + restricted.T) / 2.0)
    operators = []
    for k in range(vecs.shape[1]):
        coeffs = vecs[:, k]
        lead = coeffs[np.flatnonzero(np.abs(coeffs) > 1e-12)[0]]
        coeffs = coeffs * np.sign(lead)
        operators.append((eigs[k], np.tensordot(coeffs, np.stack(traceless), axes=1)))
    sign = 1.0 if smallest else -1.0
    operators.sort(key=lambda item: (sign * round(float(item[0]), 9), tuple(np.round(item[1].real.reshape(-1), 12))))
    basis = tuple(op for _, op in operators) + (gellmann_basis(d)[-1],)
    selected = np.array([value for value, _ in operators[:ell]])
    return AdversarialBasis(basis, selected, ell, projected_norm(channel, basis, ell))


def normalization_removal_gap(ensemble: HardInstanceEnsemble, induced: Superoperator, n: int, t: int) -> tuple:
    """(E exp(a_z a_z' f), E exp(f)) with f = n t^2 d tr(Delta_z H~(Delta_z'))."""
    signs = ensemble.all_signs()
    deltas = np.stack([ensemble.delta(z) for z in signs])
    clamps = np.array([ensemble.a(z) for z in signs])
    images = np.stack([induced.apply(delta) for delta in deltas])
    f = n * t * t * ensemble.d * np.real(np.einsum("aij,bji->ab", deltas, images))
    weighted = np.exp(np.outer(clamps, clamps) * f)
    return float(np.mean(weighted)), float(np.mean(np.exp(f)))


# =========================
# ORDER TABLE
# =========================

@dataclass(frozen=True, eq=False)
class OrderTable:
    table: pd.DataFrame
    minmax: float
    maxmin: float


def chi2_order_table(ensembles: dict, schedules: dict, n: int, t: int) -> OrderTable:
    """chi^2 on every (ensemble, schedule) pair; rows are ensembles, columns schedules.

    minmax = min over schedules of the max over ensembles (ensemble chosen after the schedule);
    maxmin = max over ensembles of the min over schedules (schedule chosen after the ensemble).
    """
    values = {
        schedule_name: {name: chi2_exact(ensemble, schedule, n, t) for name, ensemble in ensembles.items()}
        for schedule_name, schedule in schedules.items()
    }
    table = pd.DataFrame(values)
    return OrderTable(table=table, minmax=float(table.max(axis=0).min()), maxmin=float(table.min(axis=1).max()))


# =========================
# SCENARIOS
# =========================

def _load_schedule(schedule, d: int, t: int, n: int, rng: np.random.Generator) -> list:
    if isinstance(schedule, str):
        if not schedule.startswith("random:"):
            raise InvalidParameter(f"unknown schedule {schedule!r}")
        outcomes = int(schedule.split(":", 1)[1])
        return [random_rank_one_povm(d ** t, outcomes, rng) for _ in range(n)]
    return [RankOnePovm.from_json(item) for item in schedule]


def run_scenario(scenario) -> dict:
    """Evaluate a chi2 scenario: {d, t, n, ell, eps, c, basis, schedule[, seed]}."""
    if isinstance(scenario, (str, Path)):
        with open(scenario, "r") as f:
            scenario = json.load(f)
    try:
        d, t, n = int(scenario["d"]), int(scenario["t"]), int(scenario["n"])
        ell, eps = int(scenario["ell"]), float(scenario["eps"])
    except KeyError as exc:
        raise InvalidParameter(f"scenario is missing {exc.args[0]!r}") from exc
    rng = np.random.default_rng(int(scenario.get("seed", 0)))
    schedule = _expand_schedule(_load_schedule(scenario.get("schedule", "random:4"), d, t, n, rng), n)
    channels = [lueders_channel(povm) for povm in schedule]
    induced = [induced_channel(channel, d, t) for channel in channels]

    basis_kind = scenario.get("basis", "gellmann")
    if basis_kind == "gellmann":
        basis = None
    elif basis_kind == "adversarial":
        average = Superoperator(sum(h.liouville for h in induced) / len(induced), d, d)
        basis = adversarial_basis(average, ell).basis
    else:
        raise InvalidParameter(f"unknown basis {basis_kind!r}")
    ensemble = HardInstanceEnsemble(d, ell, eps, float(scenario.get("c", HARD_INSTANCE_C)), basis)

    exact = chi2_exact(ensemble, schedule, n, t)
    bound = ingster_suslina_bound(ensemble, schedule, n, t)
    signs = ensemble.all_signs()
    picks = rng.integers(0, len(signs), size=(min(16, len(signs)), 2))
    breakdown = []
    for i, channel in enumerate(channels):
        terms = [linearized_terms(ensemble, channel, signs[a], signs[b], t) for a, b in picks]
        linear = float(np.mean([x.ll for x in terms]))
        nonlinear = float(np.mean([x.nonlinear for x in terms]))
        breakdown.append(
            {
                "round": i,
                "linear": linear,
                "nonlinear": nonlinear,
                "linear_nonlinear_ratio": abs(nonlinear) / abs(linear) if linear else None,
            }
        )
    return {"chi2_exact": exact, "is_bound": bound, "per_term_breakdown": breakdown}
