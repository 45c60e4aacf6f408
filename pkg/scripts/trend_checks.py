"""Trend checks on an imbalanced synthetic dataset (50,000 vectors, 0.4% genuine).

1. Imputation helps: at 50% Any-Missing the best imputer's TMR@FMR=0.1% is
   at least the no-imputation baseline in 4 of 5 trials. The baseline sums
   the available scores (missing entries stay unfilled); the mean-of-available
   baseline is printed next to it for reference.
2. Natural vs simulated: a frozen 30% "natural" pattern and simulated
   corruption at the matched proportion agree within two simulated std.

Imputers are trained on the class-balanced training set in both checks.

Run from the project folder:
    python scripts/trend_checks.py [--seed 0]
"""
import os
import sys
import argparse
import time

import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from app.core.logging_setup import configure_logging
from app.models.score_dataset import ScoreDataset
from app.schemas.experiment import BalanceMode, ExperimentConfig, ImputerSetting
from app.schemas.fusion import MissingConvention
from app.schemas.simulation import CorruptionSpec, MissingTarget
from app.services.experiment_runner import compare_natural_vs_simulated, run
from app.services.missing_sim import corrupt
from app.services.score_data import default_synth_config, synth_generate
from app.utils.seeding import corruption_seed

N_GENUINE = 200
N_IMPOSTER = 49_800
TIME_LIMIT_S = 120


def acceptance_source(seed: int) -> ScoreDataset:
    # one genuine vector per subject, so each test split holds about 40 genuine rows
    return synth_generate(default_synth_config(seed=seed, n_genuine=N_GENUINE, n_imposter=N_IMPOSTER))


def _per_trial(source: ScoreDataset, seed: int, trials: int, convention: MissingConvention) -> pd.DataFrame:
    config = ExperimentConfig(
        proportions=[50],
        variants=[MissingTarget.any],
        balance=BalanceMode.on,
        fusion_missing=convention,
        trials=trials,
        base_seed=seed,
    )
    report = run(config, source=source, progress=False)
    frame = pd.DataFrame({c.imputer.value: c.trial_tmr for c in report.cells})
    frame.index = [f"trial {t + 1}" for t in range(trials)]
    return frame


def imputation_helps(seed: int, trials: int) -> bool:
    source = acceptance_source(seed)
    per_trial = _per_trial(source, seed, trials, MissingConvention.sum)
    # imputed vectors are complete, so only the baseline depends on the convention
    mean_baseline = _per_trial(source, seed, trials, MissingConvention.mean)[ImputerSetting.none.value]

    imputed = per_trial.drop(columns=[ImputerSetting.none.value])
    per_trial["none_mean_conv"] = mean_baseline
    per_trial["best"] = imputed.max(axis=1)
    per_trial["helps"] = per_trial["best"] >= per_trial[ImputerSetting.none.value]
    print("Any-Missing 50%, TMR@FMR=0.1% per trial (balanced imputer training)")
    print(per_trial.to_string(float_format=lambda v: f"{v:.4f}"))
    wins = int(per_trial["helps"].sum())
    print(f"best imputer >= no imputation in {wins}/{trials} trials")
    print(f"best imputer >= mean-of-available baseline in "
          f"{int((per_trial['best'] >= per_trial['none_mean_conv']).sum())}/{trials} trials\n")
    return wins >= min(4, trials)


def natural_matches_simulated(seed: int, trials: int) -> bool:
    clean = acceptance_source(seed)
    frozen = CorruptionSpec(proportion=30, target=MissingTarget.any,
                            seed=corruption_seed(seed, MissingTarget.any, "natural"))
    natural = corrupt(clean, frozen)
    config = ExperimentConfig(balance=BalanceMode.on, trials=trials, base_seed=seed)
    report = compare_natural_vs_simulated(natural, config)
    frame = pd.DataFrame([
        {
            "imputer": row.imputer.value,
            "natural_mean": row.natural_tmr,
            "natural_std": row.natural_std,
            "simulated_mean": row.simulated_mean,
            "simulated_std": row.simulated_std,
        }
        for row in report.rows
    ])
    gap = (frame["natural_mean"] - frame["simulated_mean"]).abs()
    frame["within_2std"] = gap <= 2 * frame["simulated_std"] + 1e-12
    print(f"Natural {report.natural_missing_pct:.2f}% vs simulated {report.matched_proportion}%")
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    return bool(frame["within_2std"].all())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=5)
    args = parser.parse_args()
    configure_logging("WARNING")

    failures = 0
    for name, check in (("imputation_helps", imputation_helps), ("natural_matches_simulated", natural_matches_simulated)):
        start = time.perf_counter()
        ok = check(args.seed, args.trials)
        elapsed = time.perf_counter() - start
        if elapsed > TIME_LIMIT_S:
            print(f"{name} took {elapsed:.1f}s (limit {TIME_LIMIT_S}s)")
            ok = False
        print(f"{'PASS' if ok else 'FAIL'}: {name} ({elapsed:.1f}s)\n")
        failures += 0 if ok else 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
