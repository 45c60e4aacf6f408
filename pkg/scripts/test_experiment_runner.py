import sys, os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))
sys.path.append(os.path.dirname(__file__))

import json
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from app.core.errors import ComparisonError, ConfigError, FusionError
from app.models.score_dataset import ScoreDataset
from app.schemas.experiment import BalanceMode, ExperimentConfig, ImputerSetting, TrainingArm
from app.schemas.simulation import CorruptionSpec, MissingTarget
from app.services import experiment_runner
from app.services.experiment_runner import (
    compare_natural_vs_simulated,
    matched_proportion,
    run,
    summarize_dataset,
)
from app.services.missing_sim import corrupt
from app.services.score_data import default_synth_config, save_csv, split_train_test, synth_generate
from app.utils.reporting import grid_frame, write_comparison, write_report
from app.utils.seeding import purpose_seed
from score_fixtures import random_dataset, table_one

SETTINGS = [ImputerSetting.none, ImputerSetting.mean, ImputerSetting.median, ImputerSetting.mice_bayes]


def _source(seed: int = 1) -> ScoreDataset:
    return synth_generate(default_synth_config(seed=seed, n_genuine=40, n_imposter=400))


def _config(**kw) -> ExperimentConfig:
    base = dict(
        proportions=[0, 50],
        variants=[MissingTarget.any, MissingTarget.genuine],
        imputers=SETTINGS,
        trials=2,
        base_seed=7,
        balance=BalanceMode.both,
        target_fmr=0.01,
    )
    base.update(kw)
    return ExperimentConfig(**base)


# =========================
# SUMMARY
# =========================

def test_summary_of_table_one():
    s = summarize_dataset(table_one())
    assert s.n_vectors == 4 and s.n_incomplete == 2
    assert s.natural_missing_pct == 50.0
    assert s.genuine_pct == 100.0 and s.n_imposter == 0
    assert s.n_probe_subjects == 4


def test_summary_of_empty_dataset():
    s = summarize_dataset(ScoreDataset.empty(["a", "b"]))
    assert s.n_vectors == 0 and s.genuine_pct == 0.0 and s.natural_missing_pct == 0.0


def test_summary_genuine_share_of_a_large_set():
    n, n_gen = 133903, 517
    ds = ScoreDataset(
        modalities=("a", "b"),
        values=np.zeros((n, 2)),
        mask=np.ones((n, 2), dtype=bool),
        genuine=np.arange(n) < n_gen,
        probe_ids=np.array(["p"] * n, dtype=object),
        gallery_ids=np.array(["g"] * n, dtype=object),
    )
    assert abs(summarize_dataset(ds).genuine_pct - 0.386) < 0.001


# =========================
# GRID
# =========================

def test_grid_has_one_cell_per_combination():
    report = run(_config(), source=_source(), progress=False)
    assert len(report.cells) == 2 * 2 * 2 * len(SETTINGS)
    keys = {(c.arm, c.variant, c.proportion, c.imputer) for c in report.cells}
    assert len(keys) == len(report.cells)
    assert report.n_failed == 0
    for cell in report.cells:
        assert len(cell.trial_tmr) == 2
        assert 0.0 <= cell.mean_tmr <= 1.0
        trials = np.asarray(cell.trial_tmr)
        assert abs(cell.std_tmr - trials.std()) < 1e-12


def test_zero_proportion_is_the_same_for_every_imputer():
    report = run(_config(), source=_source(), progress=False)
    for arm in (TrainingArm.unbalanced, TrainingArm.balanced):
        values = {
            c.mean_tmr for c in report.cells
            if c.arm is arm and c.proportion == 0
        }
        assert len(values) == 1


def test_same_seed_same_report():
    a = run(_config(), source=_source(), progress=False)
    b = run(_config(), source=_source(), progress=False)
    assert [c.model_dump() for c in a.cells] == [c.model_dump() for c in b.cells]
    assert a.test_fingerprint == b.test_fingerprint


def test_arms_share_the_corrupted_test_set():
    report = run(_config(reduced_arm=True), source=_source(), progress=False)
    by_key = {}
    for c in report.cells:
        by_key.setdefault((c.variant, c.proportion), set()).add(tuple(c.test_fingerprints))
    for fingerprints in by_key.values():
        assert len(fingerprints) == 1


def test_training_side_ignores_test_scores():
    source = _source()
    config = _config(reduced_arm=True, imputers=[ImputerSetting.mean])
    first = run(config, source=source, progress=False)
    _, test = split_train_test(source, config.train_frac, purpose_seed(config.base_seed, "split"))
    test_ids = set(test.probe_ids.tolist())
    is_test = np.array([p in test_ids for p in source.probe_ids], dtype=bool)
    values = source.values.copy()
    values[is_test] = np.random.default_rng(99).random((int(is_test.sum()), source.n_modalities))
    second = run(config, source=source.with_scores(values, source.mask), progress=False)

    assert [a.train_fingerprint for a in first.arms] == [a.train_fingerprint for a in second.arms]
    assert first.correlation == second.correlation
    assert first.test_fingerprint != second.test_fingerprint


def test_reports_are_byte_identical_for_one_seed():
    texts = []
    for _ in range(2):
        report = run(_config(), source=_source(), progress=False)
        with tempfile.TemporaryDirectory() as tmp:
            write_report(report, tmp)
            texts.append({p.name: p.read_bytes() for p in sorted(Path(tmp).iterdir())})
    assert texts[0] == texts[1]


def test_training_arms_sizes():
    report = run(_config(reduced_arm=True), source=_source(), progress=False)
    arms = {a.arm: a for a in report.arms}
    assert arms[TrainingArm.balanced].train.n_genuine == arms[TrainingArm.balanced].train.n_imposter
    assert arms[TrainingArm.reduced].train.n_vectors == arms[TrainingArm.balanced].train.n_vectors
    assert arms[TrainingArm.unbalanced].train.n_vectors == report.train.n_vectors
    # the test side never shrinks with the arm
    assert report.test.n_vectors > 0 and report.train.n_vectors + report.test.n_vectors == 440


def test_incomplete_source_rows_are_dropped_first():
    source = corrupt(_source(), CorruptionSpec(proportion=20, seed=3))
    report = run(_config(balance=BalanceMode.off, imputers=[ImputerSetting.mean]), source=source, progress=False)
    assert report.dropped_incomplete == 88
    assert report.source.n_incomplete == 88
    assert report.train.n_incomplete == 0


def test_failing_setting_is_recorded_per_cell():
    original = experiment_runner.evaluate_setting

    def flaky(train, test, setting, config):
        if setting is ImputerSetting.median:
            raise FusionError("nothing to fuse", {"row": 0})
        return original(train, test, setting, config)

    experiment_runner.evaluate_setting = flaky
    try:
        report = run(_config(balance=BalanceMode.off), source=_source(), progress=False)
    finally:
        experiment_runner.evaluate_setting = original
    failed = [c for c in report.cells if c.status == "failed"]
    assert failed and all(c.imputer is ImputerSetting.median for c in failed)
    assert all(c.mean_tmr is None and c.error["error"] == "fusion_error" for c in failed)
    assert report.n_failed == len(failed)
    assert all(c.status == "ok" for c in report.cells if c.imputer is not ImputerSetting.median)


def test_unbuildable_arm_fails_only_its_cells():
    with tempfile.TemporaryDirectory() as tmp:
        train_path, test_path = Path(tmp) / "train.csv", Path(tmp) / "test.csv"
        save_csv(random_dataset(0, 200, seed=1), train_path)
        save_csv(random_dataset(10, 90, seed=2), test_path)
        config = _config(
            input=str(train_path),
            test_input=str(test_path),
            proportions=[0, 30],
            variants=[MissingTarget.any],
            imputers=[ImputerSetting.none, ImputerSetting.mean],
            reduced_arm=True,
        )
        report = run(config, progress=False)
    unbalanced = [c for c in report.cells if c.arm is TrainingArm.unbalanced]
    assert len(unbalanced) == 4 and all(c.status == "ok" for c in unbalanced)
    failed = [c for c in report.cells if c.arm is not TrainingArm.unbalanced]
    assert len(failed) == 2 * 2 * 2
    assert all(c.status == "failed" and c.error["error"] == "balance_error" for c in failed)
    assert all(c.trial_tmr == [None, None] and c.mean_tmr is None for c in failed)
    assert report.n_failed == len(failed)
    arms = {a.arm: a for a in report.arms}
    assert arms[TrainingArm.balanced].train is None
    assert arms[TrainingArm.reduced].error["error"] == "balance_error"
    assert arms[TrainingArm.unbalanced].train.n_genuine == 0


def test_single_genuine_subject_never_aborts_the_grid():
    # whichever side the only genuine subject lands on, every cell is reported
    source = random_dataset(1, 300, n_subjects=50)
    for seed in range(8):
        config = _config(
            proportions=[0],
            variants=[MissingTarget.any],
            imputers=[ImputerSetting.none, ImputerSetting.mean],
            trials=1,
            base_seed=seed,
        )
        report = run(config, source=source, progress=False)
        assert len(report.cells) == 2 * 2
        assert report.n_failed == sum(1 for c in report.cells if c.status == "failed")
        assert all(c.error is not None for c in report.cells if c.status == "failed")


def test_missing_source_is_a_config_error():
    try:
        run(_config(), progress=False)
        assert False, "ran without a score source"
    except ConfigError:
        pass


# =========================
# NATURAL vs SIMULATED
# =========================

def test_matched_proportion():
    assert matched_proportion(30.39) == 30
    assert matched_proportion(9.99) == 0
    assert matched_proportion(97.0) == 90


def test_compare_on_complete_data_is_rejected():
    try:
        compare_natural_vs_simulated(_source(), _config())
        assert False, "complete dataset compared"
    except ComparisonError:
        pass


def test_compare_natural_vs_simulated():
    natural = corrupt(_source(2), CorruptionSpec(proportion=30, seed=5))
    config = _config(imputers=[ImputerSetting.none, ImputerSetting.mean], balance=BalanceMode.off, trials=3)
    report = compare_natural_vs_simulated(natural, config)
    assert report.matched_proportion == 30
    assert abs(report.natural_missing_pct - 30.0) < 1e-9
    assert report.simulated_source.n_incomplete == 0
    assert len(report.rows) == 2
    for row in report.rows:
        assert row.natural_error is None and row.simulated_error is None
        assert 0.0 <= row.natural_tmr <= 1.0
        assert len(row.simulated_trials) == 3 and len(row.natural_trials) == 3
        assert abs(row.natural_tmr - float(np.mean(row.natural_trials))) < 1e-12
        assert row.natural_std == float(np.std(row.natural_trials))


# =========================
# REPORT FILES
# =========================

def test_report_files_are_written():
    config = _config(proportions=[0, 50], balance=BalanceMode.off, imputers=[ImputerSetting.none, ImputerSetting.mean])
    report = run(config, source=_source(), progress=False)
    with tempfile.TemporaryDirectory() as tmp:
        written = write_report(report, tmp)
        names = sorted(p.name for p in written)
        assert names == ["correlation.json", "grid.csv", "plot_tmr_at_50.csv", "report.json"]
        grid = pd.read_csv(Path(tmp) / "grid.csv")
        assert len(grid) == len(report.cells)
        assert list(grid.columns[-3:]) == ["tmr_trial_1", "tmr_trial_2", "error"]
        doc = json.loads((Path(tmp) / "report.json").read_text(encoding="utf-8"))
        assert doc["test_fingerprint"] == report.test_fingerprint
        plot = pd.read_csv(Path(tmp) / "plot_tmr_at_50.csv")
        assert len(plot) == 2 * 2
    assert list(grid_frame(report)["imputer"][:2]) == ["none", "mean"]


def test_comparison_files_are_written():
    natural = corrupt(_source(3), CorruptionSpec(proportion=40, seed=1))
    config = _config(imputers=[ImputerSetting.mean], balance=BalanceMode.off, trials=1)
    report = compare_natural_vs_simulated(natural, config)
    with tempfile.TemporaryDirectory() as tmp:
        written = write_comparison(report, tmp, ["csv"])
        assert [p.name for p in written] == ["comparison.csv"]
        frame = pd.read_csv(written[0])
        assert frame["matched_proportion"].tolist() == [40]


def run_tests():
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"PASS: {name}")
            except AssertionError as e:
                failures += 1
                print(f"FAIL: {name} {e}")
    return failures


if __name__ == "__main__":
    sys.exit(1 if run_tests() else 0)
