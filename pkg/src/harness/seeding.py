"""
seeding.py

Counter-based split of a master seed into per-trial generators.

A trial stream is keyed by (master seed, trial index, stream label), so a
trial draws the same numbers no matter which worker runs it or in which
order trials finish.
"""

import zlib

import numpy as np

SEED_MASK = (1 << 63) - 1


def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def trial_seed(master_seed: int, trial: int, label: str = "trial") -> int:
    """First 63-bit word of SeedSequence(master_seed, spawn_key=(trial, crc32(label)))."""
    sequence = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial), label_key(label)))
    return int(sequence.generate_state(1, dtype=np.uint64)[0]) & SEED_MASK


def trial_rng(master_seed: int, trial: int, label: str = "trial") -> np.random.Generator:
    return np.random.default_rng(trial_seed(master_seed, trial, label))
