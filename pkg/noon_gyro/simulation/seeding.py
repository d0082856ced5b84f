"""
Seed derivation for reproducible simulation.

A master seed fans out into independent generators through numpy's
SeedSequence: the component path is mixed into the master entropy by a fixed
hash, so adding a new component never perturbs existing streams.
"""

from typing import Tuple

import numpy as np

# Component indices. Never renumber these: stored seeds refer to them.
BINNED_COUNTS = 1
TIME_TAGS = 2
BOOTSTRAP = 3
MONTE_CARLO = 4
NUMERICAL_UNCERTAINTY = 5


def seed_sequence(master_seed: int, *path: int) -> np.random.SeedSequence:
    if master_seed < 0:
        raise ValueError(f"seeds must be nonnegative, got {master_seed}")
    return np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(p) for p in path))


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the component addressed by path under master_seed."""
    return np.random.default_rng(seed_sequence(master_seed, *path))


def derive_seed(master_seed: int, *path: int) -> int:
    """Integer sub-seed for a component; stable across numpy versions."""
    state: Tuple[int, ...] = tuple(seed_sequence(master_seed, *path).generate_state(2, np.uint32))
    return (int(state[0]) << 32) | int(state[1])
