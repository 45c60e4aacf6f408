import logging
from typing import Iterator, Tuple

import numpy as np

from app.core.errors import PreconditionError, SimulationError
from app.models.score_dataset import ClassLabel, ScoreDataset
from app.schemas.simulation import CorruptionSpec, MissingTarget, TrialPlan
from app.utils.seeding import corruption_seed, rng_for, trial_seed

logger = logging.getLogger("app.missing_sim")


def _target_rows(dataset: ScoreDataset, target: MissingTarget) -> np.ndarray:
    if target is MissingTarget.any:
        return np.arange(dataset.n_rows)
    return np.flatnonzero(dataset.class_mask(ClassLabel(target.value)))


def corrupted_row_count(proportion: int, n_target: int) -> int:
    # integer arithmetic: floor(proportion / 100 * n) without float rounding
    return (int(proportion) * int(n_target)) // 100


def corrupt(dataset: ScoreDataset, spec: CorruptionSpec) -> ScoreDataset:
    """Drop scores from a random subset of the target class.

    n = floor(proportion/100 * N_target) vectors are picked without
    replacement; each loses a uniform count of scores in [1, m-1] at
    positions chosen without replacement. Every other row is untouched.
    """
    target = MissingTarget(spec.target)
    rows = _target_rows(dataset, target)
    if spec.proportion > 0 and rows.size == 0:
        raise SimulationError(
            f"no {target.value} vectors to corrupt",
            {"target": target.value, "proportion": spec.proportion},
        )
    incomplete = rows[~dataset.complete_mask[rows]]
    if incomplete.size:
        raise PreconditionError(
            "target rows already contain missing scores; listwise-delete before simulating",
            {"target": target.value, "incomplete_rows": [int(i) for i in incomplete[:50]]},
        )

    n = corrupted_row_count(spec.proportion, rows.size)
    if n == 0:
        return dataset

    m = dataset.n_modalities
    rng = rng_for(spec.seed)
    chosen = rows[rng.permutation(rows.size)[:n]]
    n_drop = rng.integers(1, m, size=n)  # upper bound exclusive -> [1, m-1]
    # random ranks per row; dropping the n_drop lowest ranks is a uniform sample without replacement
    ranks = np.argsort(np.argsort(rng.random((n, m)), axis=1), axis=1)
    drop = ranks < n_drop[:, None]

    mask = dataset.mask.copy()
    mask[chosen] &= ~drop
    logger.debug(f"Corrupted {n}/{rows.size} {target.value} vectors at {spec.proportion}% (seed={spec.seed})")
    return dataset.with_scores(dataset.values, mask)


def plan_trials(
    dataset: ScoreDataset, plan: TrialPlan, partition: str = "train"
) -> Iterator[Tuple[CorruptionSpec, ScoreDataset]]:
    """Yield ``trials x len(specs)`` corrupted copies of one partition.

    Trial t of a spec uses the seed derived from ``base_seed + t``, the
    target class and the partition, so train and test of the same trial get
    independent patterns.
    """
    for spec in plan.specs:
        for t in range(plan.trials):
            seed = corruption_seed(trial_seed(plan.base_seed, t), spec.target, partition)
            trial_spec = spec.model_copy(update={"seed": seed})
            yield trial_spec, corrupt(dataset, trial_spec)


def missing_fraction(dataset: ScoreDataset) -> float:
    if dataset.n_rows == 0:
        return 0.0
    return float((~dataset.mask).mean())


def incomplete_fraction(dataset: ScoreDataset) -> float:
    if dataset.n_rows == 0:
        return 0.0
    return float((~dataset.complete_mask).mean())
