"""
conftest.py

Pytest configuration and shared fixtures for the quantum certification lab tests.
"""

import json

import numpy as np
import pytest

from src.qcore.states import diagonal_state, maximally_mixed, random_density


@pytest.fixture
def rng():
    """Seeded generator, fresh per test."""
    return np.random.default_rng(20240611)


@pytest.fixture
def qubit_state(rng):
    """Random full-rank qubit density matrix."""
    return np.asarray(random_density(2, 2, rng))


@pytest.fixture
def qutrit_state(rng):
    """Random full-rank qutrit density matrix."""
    return np.asarray(random_density(3, 3, rng))


@pytest.fixture
def pure_qubit(rng):
    """Random rank-one qubit density matrix."""
    return np.asarray(random_density(2, 1, rng))


@pytest.fixture
def mixed_qubit():
    """Maximally mixed qubit."""
    return np.asarray(maximally_mixed(2))


@pytest.fixture
def skewed_qubit():
    """diag(0.9, 0.1): trace distance 0.8 from I/2."""
    return np.asarray(diagonal_state([0.9, 0.1]))


@pytest.fixture
def dyadic_sigma():
    """diag(1/2, 1/4, 1/8, 1/8), the certification example in d = 4."""
    return np.asarray(diagonal_state([0.5, 0.25, 0.125, 0.125]))


@pytest.fixture
def sample_scenario():
    """Small chi2 scenario: one qubit, two rounds of a random 4-outcome POVM."""
    return {
        "d": 2,
        "t": 1,
        "n": 2,
        "ell": 3,
        "eps": 0.3,
        "c": 2.0,
        "basis": "gellmann",
        "schedule": "random:4",
        "seed": 7,
    }


@pytest.fixture
def scenario_file(tmp_path, sample_scenario):
    """sample_scenario written to disk."""
    path = tmp_path / "scenario.json"
    with open(path, "w") as f:
        json.dump(sample_scenario, f, indent=4)
    return path
