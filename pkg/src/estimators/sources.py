"""
sources.py

Estimator sources: objects that turn copies of a state into one estimate
per call and expose the exact first and second moments of that estimate.
The collision and Hilbert-Schmidt statistics are written against this
interface.
"""

from abc import ABC, abstractmethod

import numpy as np

from src.estimators.povm import (
    EstimatorOutput,
    RejectionStats,
    uniform_first_moment,
    uniform_povm_sample,
    uniform_second_moment,
)
from src.estimators.ptsw import PtswEstimator
from src.qcore.states import HermitianOp, as_matrix


class EstimatorSource(ABC):
    """Produces independent estimates of a d x d state."""

    dim: int
    copies_per_sample: int
    label: str = "source"

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> EstimatorOutput:
        ...

    @abstractmethod
    def exact_mean(self) -> np.ndarray:
        ...

    @abstractmethod
    def exact_second_moment(self) -> np.ndarray:
        ...

    def sample_many(self, n: int, rng: np.random.Generator) -> list:
        return [self.sample(rng) for _ in range(n)]


class FixedSource(EstimatorSource):
    """Always returns the same operator."""

    label = "fixed"

    def __init__(self, value, copies_per_sample: int = 1):
        self.value = HermitianOp(as_matrix(value))
        self.dim = self.value.dim
        self.copies_per_sample = int(copies_per_sample)

    def sample(self, rng: np.random.Generator) -> EstimatorOutput:
        return EstimatorOutput(self.value, copies_consumed=self.copies_per_sample)

    def exact_mean(self) -> np.ndarray:
        return np.array(self.value.entries)

    def exact_second_moment(self) -> np.ndarray:
        return np.kron(self.value.entries, self.value.entries)


class UniformPovmSource(EstimatorSource):
    """One copy, uniform POVM, outcome projector reported without debiasing."""

    label = "uniform-povm"

    def __init__(self, rho):
        self.rho = np.array(as_matrix(rho))
        self.dim = self.rho.shape[0]
        self.copies_per_sample = 1

    def sample(self, rng: np.random.Generator) -> EstimatorOutput:
        psi = uniform_povm_sample(self.rho, rng)
        return EstimatorOutput(HermitianOp(psi.projector()), copies_consumed=1)

    def exact_mean(self) -> np.ndarray:
        return uniform_first_moment(self.rho)

    def exact_second_moment(self) -> np.ndarray:
        return uniform_second_moment(self.rho)


class PtswSource(EstimatorSource):
    """Random-purification estimator on batches of t copies."""

    label = "ptsw"

    def __init__(self, rho, t: int):
        self.estimator = PtswEstimator(rho, t)
        self.dim = self.estimator.d
        self.copies_per_sample = int(t)
        self.stats = RejectionStats()

    def sample(self, rng: np.random.Generator) -> EstimatorOutput:
        return self.estimator.sample(rng, self.stats)

    def exact_mean(self) -> np.ndarray:
        return self.estimator.exact_mean()

    def exact_second_moment(self) -> np.ndarray:
        return self.estimator.exact_second_moment()
