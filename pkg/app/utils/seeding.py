"""Seed derivation for the experiment grid.

Every random stream of a run is a documented function of one base seed:

* trial ``t`` of a plan uses ``base_seed + t``;
* the corruption of one partition under one target class mixes that trial
  seed with fixed codes for the target and the partition through
  ``numpy.random.SeedSequence`` and keeps the first 64-bit word;
* the split and the class balancing get their own streams from the base seed.

Changing the proportion does not change the seed, so the nine corrupted
versions of one (trial, target, partition) share a random stream.
"""
import numpy as np

TARGET_CODES = {"any": 0, "genuine": 1, "imposter": 2}
PARTITION_CODES = {"train": 0, "test": 1, "natural": 2}
PURPOSE_CODES = {"split": 101, "balance": 102, "reduce": 103}

_MASK64 = (1 << 64) - 1


def _mix(seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed: int) -> np.random.Generator:
    """Generator for any 64-bit seed; negative values wrap modulo 2**64."""
    return np.random.default_rng(np.random.SeedSequence(int(seed) & _MASK64))


def trial_seed(base_seed: int, trial: int) -> int:
    return int(base_seed) + int(trial)


def corruption_seed(seed: int, target: str, partition: str) -> int:
    return _mix(seed, TARGET_CODES[getattr(target, "value", target)], PARTITION_CODES[partition])


def purpose_seed(base_seed: int, purpose: str) -> int:
    return _mix(base_seed, PURPOSE_CODES[purpose])
