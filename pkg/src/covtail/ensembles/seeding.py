"""Per-trial seed derivation.

Trial ``t`` of a run with master seed ``m`` always draws from
``SeedSequence([m, t])``, whose entropy pool hashing acts as the avalanche
mixer. Scheduling order and worker count therefore never change a draw.
"""

from __future__ import annotations

import numpy as np

from covtail.errors import InputError

_SEED_MAX = 2**64 - 1


def _check_seed(seed: int, name: str = "seed") -> int:
    seed = int(seed)
    if not 0 <= seed <= _SEED_MAX:
        raise InputError(f"{name} must be a 64-bit unsigned integer, got {seed}")
    return seed


def trial_seed(master_seed: int, trial: int) -> int:
    """64-bit seed for one trial."""
    master_seed = _check_seed(master_seed, "master_seed")
    if trial < 0:
        raise InputError(f"trial index must be ≥ 0, got {trial}")
    state = np.random.SeedSequence([master_seed, int(trial)]).generate_state(1, np.uint64)
    return int(state[0])


def as_seed_sequence(seed: int | np.random.SeedSequence) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(_check_seed(seed))


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.default_rng(as_seed_sequence(seed))
