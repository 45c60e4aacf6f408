import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from app.core.config import settings
from app.core.errors import ComparisonError, ConfigError, ScoreFillError
from app.models.score_dataset import ScoreDataset
from app.schemas.dataset import DatasetSummary
from app.schemas.experiment import (
    ArmInfo,
    CellRecord,
    ComparisonReport,
    ComparisonRow,
    ExperimentConfig,
    ExperimentReport,
    ImputerSetting,
    TrainingArm,
)
from app.schemas.simulation import CorruptionSpec, MissingTarget
from app.services import imputers
from app.services.fusion import fit_norm, fuse_dataset, normalize
from app.services.metrics import correlation_summary, roc, tmr_at_fmr
from app.services.missing_sim import corrupt, incomplete_fraction
from app.services.score_data import (
    balance_classes,
    listwise_delete,
    load_csv,
    reduce_training,
    split_train_test,
    synth_generate,
)
from app.utils.seeding import corruption_seed, purpose_seed, trial_seed

logger = logging.getLogger("app.runner")

GRID_STEP = 10

# (TMR, error record); exactly one of the two is set
Outcome = Tuple[Optional[float], Optional[Dict]]


# ======================================================
# DATASET SUMMARY
# ======================================================

def summarize_dataset(dataset: ScoreDataset) -> DatasetSummary:
    n = dataset.n_rows
    n_gen = dataset.n_genuine
    n_incomplete = int((~dataset.complete_mask).sum()) if n else 0
    cells = dataset.mask.size
    return DatasetSummary(
        provenance=dataset.provenance,
        modalities=list(dataset.modalities),
        n_modalities=dataset.n_modalities,
        n_vectors=n,
        n_genuine=n_gen,
        n_imposter=n - n_gen,
        genuine_pct=100.0 * n_gen / n if n else 0.0,
        n_incomplete=n_incomplete,
        natural_missing_pct=100.0 * n_incomplete / n if n else 0.0,
        missing_cell_pct=100.0 * float((~dataset.mask).sum()) / cells if cells else 0.0,
        n_probe_subjects=int(np.unique(dataset.probe_ids.astype(str)).size) if n else 0,
    )


# ======================================================
# PIPELINE PIECES
# ======================================================

def load_source(config: ExperimentConfig) -> ScoreDataset:
    if config.synth is not None:
        return synth_generate(config.synth)
    if config.input is None:
        raise ConfigError("no score source: set 'input' or 'synth'")
    return load_csv(config.input, config.columns)


def partition(config: ExperimentConfig, dataset: ScoreDataset) -> Tuple[ScoreDataset, ScoreDataset]:
    if config.test_input:
        # development / test files given: no random split
        return dataset, load_csv(config.test_input, config.columns)
    return split_train_test(dataset, config.train_frac, purpose_seed(config.base_seed, "split"))


def training_arms(
    config: ExperimentConfig, train: ScoreDataset, base_seed: Optional[int] = None
) -> Tuple[Dict[TrainingArm, ScoreDataset], Dict[TrainingArm, Dict]]:
    """Training set per arm, plus the error record of every arm that could not be built."""
    seed = config.base_seed if base_seed is None else base_seed
    arms: Dict[TrainingArm, ScoreDataset] = {}
    failed: Dict[TrainingArm, Dict] = {}
    balanced: Optional[ScoreDataset] = None
    balance_error: Optional[Dict] = None
    for arm in config.arms():
        if arm is TrainingArm.unbalanced:
            arms[arm] = train
            continue
        if balanced is None and balance_error is None:
            try:
                balanced = balance_classes(train, purpose_seed(seed, "balance"))
            except Exception as exc:
                balance_error = _failure(exc)
                logger.warning(f"Balancing failed, {arm.value} arm skipped: {balance_error['message']}")
        if balance_error is not None:
            failed[arm] = balance_error
        elif arm is TrainingArm.balanced:
            arms[arm] = balanced
        else:
            arms[arm] = reduce_training(train, balanced.n_rows, purpose_seed(seed, "reduce"))
    return arms, failed


def evaluate_setting(
    train: ScoreDataset, test: ScoreDataset, setting: ImputerSetting, config: ExperimentConfig
) -> float:
    """Impute (or not), normalise on the training side, fuse the test side, read TMR@FMR."""
    spec = config.imputer_spec(setting)
    if spec is None:
        norm_source, fused_input = train, test
    else:
        model, norm_source = imputers.fit_transform(train, spec)
        fused_input = imputers.transform(model, test)
    params = fit_norm(norm_source)
    fused = fuse_dataset(normalize(params, fused_input), config.fusion_missing)
    return tmr_at_fmr(roc(fused, fused_input.genuine), config.target_fmr)


def _failure(exc: Exception) -> Dict:
    if isinstance(exc, ScoreFillError):
        return exc.to_record()
    return {"error": "internal_error", "message": f"{type(exc).__name__}: {exc}", "details": {}}


def _run_job(
    train: ScoreDataset,
    test: ScoreDataset,
    variant: MissingTarget,
    proportion: int,
    trial: int,
    config: ExperimentConfig,
) -> Tuple[Dict[ImputerSetting, Tuple[Optional[float], Optional[Dict]]], Optional[str]]:
    """One (arm, variant, proportion, trial): corrupt both partitions once, score every imputer."""
    seed = trial_seed(config.base_seed, trial)
    results: Dict[ImputerSetting, Tuple[Optional[float], Optional[Dict]]] = {}
    try:
        train_c = corrupt(train, CorruptionSpec(proportion=proportion, target=variant,
                                                seed=corruption_seed(seed, variant, "train")))
        test_c = corrupt(test, CorruptionSpec(proportion=proportion, target=variant,
                                              seed=corruption_seed(seed, variant, "test")))
    except Exception as exc:
        record = _failure(exc)
        return {s: (None, record) for s in config.imputers}, None

    for setting in config.imputers:
        try:
            results[setting] = (evaluate_setting(train_c, test_c, setting, config), None)
        except Exception as exc:
            logger.debug(f"{setting.value} failed at {variant.value}/{proportion}%/trial {trial}: {exc}")
            results[setting] = (None, _failure(exc))
    return results, test_c.fingerprint()


def _arm_info(arm: TrainingArm, train: Optional[ScoreDataset], error: Optional[Dict]) -> ArmInfo:
    if train is None:
        return ArmInfo(arm=arm, error=error)
    return ArmInfo(arm=arm, train=summarize_dataset(train), train_fingerprint=train.fingerprint())


def _aggregate(values: List[Optional[float]]) -> Tuple[Optional[float], Optional[float]]:
    if any(v is None for v in values):
        return None, None
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


# ======================================================
# RUN
# ======================================================

def run(
    config: ExperimentConfig, source: Optional[ScoreDataset] = None, progress: Optional[bool] = None
) -> ExperimentReport:
    """Execute the full {arm x variant x proportion x imputer} grid over ``trials`` repetitions."""
    if source is None:
        source = load_source(config)
    source_summary = summarize_dataset(source)
    dataset = source
    dropped = 0
    if config.drop_incomplete:
        dataset = listwise_delete(source)
        dropped = source.n_rows - dataset.n_rows
        if dropped:
            logger.info(f"Dropped {dropped} incomplete vectors before simulation")

    train, test = partition(config, dataset)
    if config.test_input and config.drop_incomplete:
        test = listwise_delete(test)
    arms, failed_arms = training_arms(config, train)

    jobs = [
        (arm, variant, proportion, trial)
        for arm in arms
        for variant in config.variants
        for proportion in config.proportions
        for trial in range(config.trials)
    ]
    logger.info(f"Running {len(jobs)} corruption jobs x {len(config.imputers)} imputer settings "
                f"on {train.n_rows} train / {test.n_rows} test vectors")

    show = settings.PROGRESS if progress is None else progress
    parallel = Parallel(n_jobs=config.workers, return_as="generator")
    outputs = parallel(
        delayed(_run_job)(arms[arm], test, variant, proportion, trial, config)
        for arm, variant, proportion, trial in jobs
    )
    by_job = {}
    for key, out in zip(jobs, tqdm(outputs, total=len(jobs), disable=not show, desc="grid")):
        by_job[key] = out

    cells: List[CellRecord] = []
    for arm in config.arms():
        for variant in config.variants:
            for proportion in config.proportions:
                if arm in failed_arms:
                    for setting in config.imputers:
                        cells.append(CellRecord(
                            arm=arm,
                            variant=variant,
                            proportion=proportion,
                            imputer=setting,
                            status="failed",
                            trial_tmr=[None] * config.trials,
                            error=failed_arms[arm],
                        ))
                    continue
                per_trial = [by_job[(arm, variant, proportion, t)] for t in range(config.trials)]
                fingerprints = [fp for _, fp in per_trial if fp is not None]
                for setting in config.imputers:
                    values = [res[setting][0] for res, _ in per_trial]
                    errors = [res[setting][1] for res, _ in per_trial if res[setting][1] is not None]
                    mean, std = _aggregate(values)
                    cells.append(CellRecord(
                        arm=arm,
                        variant=variant,
                        proportion=proportion,
                        imputer=setting,
                        status="failed" if errors else "ok",
                        mean_tmr=mean,
                        std_tmr=std,
                        trial_tmr=values,
                        test_fingerprints=fingerprints,
                        error=errors[0] if errors else None,
                    ))

    n_failed = sum(1 for c in cells if c.status != "ok")
    if n_failed:
        logger.warning(f"{n_failed} grid cell(s) failed; see their error records")

    return ExperimentReport(
        config=config,
        source=source_summary,
        dropped_incomplete=dropped,
        train=summarize_dataset(train),
        test=summarize_dataset(test),
        test_fingerprint=test.fingerprint(),
        arms=[_arm_info(a, arms.get(a), failed_arms.get(a)) for a in config.arms()],
        correlation=correlation_summary(train),
        cells=cells,
        n_failed=n_failed,
    )


# ======================================================
# NATURAL vs SIMULATED MISSINGNESS
# ======================================================

def matched_proportion(natural_pct: float) -> int:
    """Floor to the grid (30.39% -> 30), capped at the largest simulated level."""
    return int(min(90, math.floor(natural_pct / GRID_STEP) * GRID_STEP))


def compare_natural_vs_simulated(dataset: ScoreDataset, config: ExperimentConfig) -> ComparisonReport:
    """Score every imputer on the natural missing pattern and on simulated
    Any-missing corruption of the complete vectors at the matched proportion.

    Trial t re-splits both sources with the split seed of ``base_seed + t``
    and both arms are averaged over the trials.
    """
    natural_pct = 100.0 * incomplete_fraction(dataset)
    if natural_pct == 0.0:
        raise ComparisonError("dataset has no naturally missing scores to compare against")
    proportion = matched_proportion(natural_pct)
    logger.info(f"Natural missingness {natural_pct:.2f}% -> simulated arm at {proportion}%")
    complete = listwise_delete(dataset)

    natural: Dict[Tuple[TrainingArm, ImputerSetting], List[Outcome]] = {}
    simulated: Dict[Tuple[TrainingArm, ImputerSetting], List[Outcome]] = {}
    for t in range(config.trials):
        seed = trial_seed(config.base_seed, t)
        split_seed = purpose_seed(seed, "split")
        nat_train, nat_test = split_train_test(dataset, config.train_frac, split_seed)
        sim_train, sim_test = split_train_test(complete, config.train_frac, split_seed)
        nat_arms, nat_failed = training_arms(config, nat_train, seed)
        sim_arms, sim_failed = training_arms(config, sim_train, seed)

        for arm in config.arms():
            if arm in sim_failed:
                sim_results = {s: (None, sim_failed[arm]) for s in config.imputers}
            else:
                sim_results = _run_job(sim_arms[arm], sim_test, MissingTarget.any, proportion, t, config)[0]
            for setting in config.imputers:
                if arm in nat_failed:
                    nat = (None, nat_failed[arm])
                else:
                    try:
                        nat = (evaluate_setting(nat_arms[arm], nat_test, setting, config), None)
                    except Exception as exc:
                        nat = (None, _failure(exc))
                natural.setdefault((arm, setting), []).append(nat)
                simulated.setdefault((arm, setting), []).append(sim_results[setting])

    rows: List[ComparisonRow] = []
    for arm in config.arms():
        for setting in config.imputers:
            nat_values = [v for v, _ in natural[(arm, setting)]]
            nat_errors = [e for _, e in natural[(arm, setting)] if e is not None]
            sim_values = [v for v, _ in simulated[(arm, setting)]]
            sim_errors = [e for _, e in simulated[(arm, setting)] if e is not None]
            nat_mean, nat_std = _aggregate(nat_values)
            sim_mean, sim_std = _aggregate(sim_values)
            rows.append(ComparisonRow(
                arm=arm,
                imputer=setting,
                natural_tmr=nat_mean,
                natural_std=nat_std,
                natural_trials=nat_values,
                natural_error=nat_errors[0] if nat_errors else None,
                simulated_mean=sim_mean,
                simulated_std=sim_std,
                simulated_trials=sim_values,
                simulated_error=sim_errors[0] if sim_errors else None,
            ))

    return ComparisonReport(
        natural_missing_pct=natural_pct,
        matched_proportion=proportion,
        natural=summarize_dataset(dataset),
        simulated_source=summarize_dataset(complete),
        rows=rows,
    )
