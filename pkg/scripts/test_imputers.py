import sys, os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))
sys.path.append(os.path.dirname(__file__))

import json
import tempfile
from pathlib import Path

import numpy as np

from app.core.errors import ConfigError, FitError, TransformError
from app.models.imputer import MiceModel
from app.models.score_dataset import ScoreDataset
from app.schemas.imputer import ImputerKind, ImputerSpec
from app.schemas.simulation import CorruptionSpec
from app.services import imputers
from app.services.missing_sim import corrupt
from app.services.regression import fit_bayes_ridge
from score_fixtures import correlated_dataset, random_dataset, table_one

ALL_KINDS = list(ImputerKind)


def _spec(kind, **kw) -> ImputerSpec:
    return ImputerSpec(kind=kind, **kw)


# =========================
# UNIVARIATE
# =========================

def test_median_on_table_one():
    model = imputers.fit(table_one(), _spec(ImputerKind.median))
    assert model.stats.median[0] == 0.41
    assert model.stats.median[1] == 0.74
    out = imputers.transform(model, table_one())
    assert out.values[0, 0] == 0.41
    assert out.values[2, 1] == 0.74
    assert out.values[0, 1] == 0.74 and out.values[0, 2] == 1.00
    assert out.mask.all()


def test_mean_on_table_one():
    model = imputers.fit(table_one(), _spec(ImputerKind.mean))
    assert abs(model.stats.mean[0] - (0.41 + 0.27 + 0.85) / 3) < 1e-12
    assert abs(model.stats.mean[0] - 0.51) < 1e-12


def test_univariate_fill_is_constant_per_column():
    train = random_dataset(20, 180, seed=1)
    test = corrupt(random_dataset(10, 90, seed=2), CorruptionSpec(proportion=60, seed=3))
    for kind in (ImputerKind.mean, ImputerKind.median):
        model = imputers.fit(train, _spec(kind))
        out = imputers.transform(model, test)
        fill = model.stats.fill_values(kind.value)
        for j in range(3):
            filled = out.values[~test.mask[:, j], j]
            assert np.all(np.abs(filled - fill[j]) < 1e-12)


def test_fit_rejects_empty_and_unobserved_modalities():
    try:
        imputers.fit(ScoreDataset.empty(["a", "b"]), _spec(ImputerKind.mean))
        assert False, "empty training set accepted"
    except FitError:
        pass
    ds = table_one()
    mask = ds.mask.copy()
    mask[:, 0] = False
    try:
        imputers.fit(ds.with_scores(ds.values, mask), _spec(ImputerKind.median))
        assert False, "unobserved modality accepted"
    except FitError as e:
        assert e.details["modality"] == "Face"


# =========================
# SHARED INVARIANTS
# =========================

def test_complete_input_is_returned_unchanged():
    train = random_dataset(20, 80, seed=4)
    for kind in ALL_KINDS:
        model = imputers.fit(train, _spec(kind))
        assert imputers.transform(model, train).equals(train)


def test_observed_cells_are_never_touched():
    train = corrupt(correlated_dataset(300, 0.7, seed=5), CorruptionSpec(proportion=30, seed=1))
    test = corrupt(correlated_dataset(100, 0.7, seed=6), CorruptionSpec(proportion=50, seed=2))
    for kind in ALL_KINDS:
        model = imputers.fit(train, _spec(kind))
        out = imputers.transform(model, test)
        assert out.mask.all()
        assert np.array_equal(out.values[test.mask], test.values[test.mask])


def test_models_ignore_labels():
    train = corrupt(correlated_dataset(200, 0.8, seed=7), CorruptionSpec(proportion=20, seed=4))
    test = corrupt(correlated_dataset(60, 0.8, seed=8), CorruptionSpec(proportion=40, seed=5))
    flipped = train.with_labels(np.random.default_rng(0).permutation(train.genuine))
    for kind in ALL_KINDS:
        a = imputers.transform(imputers.fit(train, _spec(kind)), test)
        b = imputers.transform(imputers.fit(flipped, _spec(kind)), test)
        assert a.fingerprint() == b.fingerprint()


def test_modality_mismatch_is_a_transform_error():
    model = imputers.fit(random_dataset(5, 5, m=3), _spec(ImputerKind.mean))
    try:
        imputers.transform(model, random_dataset(5, 5, m=2))
        assert False, "mismatched modalities accepted"
    except TransformError:
        pass


# =========================
# MICE
# =========================

def test_mice_bayes_linear_relation():
    x = np.linspace(0.05, 0.95, 40)
    ids = np.array([f"S{i}" for i in range(40)], dtype=object)
    train = ScoreDataset(
        modalities=("s1", "s2"), values=np.column_stack([x, 0.8 * x]), mask=np.ones((40, 2), dtype=bool),
        genuine=np.zeros(40, dtype=bool), probe_ids=ids, gallery_ids=ids,
    )
    query = ScoreDataset(
        modalities=("s1", "s2"), values=[[0.5, 0.0]], mask=[[True, False]],
        genuine=[False], probe_ids=["q"], gallery_ids=["g"],
    )
    model = imputers.fit(train, _spec(ImputerKind.mice_bayes))
    out = imputers.transform(model, query)
    assert abs(out.values[0, 1] - 0.40) < 1e-3


def test_mice_constant_column_predicts_the_constant():
    ds = random_dataset(10, 40, seed=9)
    values = ds.values.copy()
    values[:, 2] = 0.3
    train = ds.with_scores(values, ds.mask)
    model = imputers.fit(train, _spec(ImputerKind.mice_bayes))
    assert np.allclose(model.regressors[2].predict(np.random.default_rng(1).random((4, 2))), 0.3)


def test_single_missing_cell_equals_direct_regression():
    train = correlated_dataset(80, 0.6, seed=10)
    model = imputers.fit(train, _spec(ImputerKind.mice_bayes))
    direct = fit_bayes_ridge(train.values[:, [0, 2]], train.values[:, 1])
    row = np.array([[0.45, 0.0, 0.55]])
    query = ScoreDataset(
        modalities=train.modalities, values=row, mask=[[True, False, True]],
        genuine=[True], probe_ids=["q"], gallery_ids=["q"],
    )
    out, trace = imputers.mice_loop(model, query)
    expected = direct.predict(row[:, [0, 2]])[0]
    assert abs(out.values[0, 1] - expected) < 1e-12
    assert trace.sweeps <= 2 and trace.converged


def test_mice_loop_without_missing_runs_no_sweep():
    ds = random_dataset(10, 10)
    model = imputers.fit(ds, _spec(ImputerKind.mice_tree))
    out, trace = imputers.mice_loop(model, ds)
    assert trace.sweeps == 0 and out is ds


def test_mice_converges_on_correlated_scores():
    full = correlated_dataset(600, 0.99, seed=11)
    train = corrupt(full, CorruptionSpec(proportion=30, seed=12))
    model = imputers.fit(train, _spec(ImputerKind.mice_bayes))
    _, trace = imputers.mice_loop(model, train)
    assert trace.sweeps <= 10
    assert trace.max_changes[-1] < 1e-4
    tail = trace.max_changes[1:]
    assert all(b <= a + 1e-15 for a, b in zip(tail, tail[1:]))


def test_mice_beats_mean_on_correlated_scores():
    for seed in range(5):
        full = correlated_dataset(1000, 0.9, seed=100 + seed)
        hit = corrupt(full, CorruptionSpec(proportion=30, seed=seed))
        holes = ~hit.mask

        def rmse(kind):
            out = imputers.transform(imputers.fit(hit, _spec(kind)), hit)
            return float(np.sqrt(np.mean((out.values[holes] - full.values[holes]) ** 2)))

        assert rmse(ImputerKind.mean) >= 1.5 * rmse(ImputerKind.mice_bayes)


def test_mice_needs_two_complete_rows():
    try:
        imputers.fit(table_one().take([0, 1, 2]), _spec(ImputerKind.mice_knn))
        assert False, "one complete row accepted"
    except FitError:
        pass


def test_mice_knn_and_tree_stay_in_training_range():
    rng = np.random.default_rng(13)
    n = 300
    ids = np.array([f"S{i % 30}" for i in range(n)], dtype=object)
    train = ScoreDataset(
        modalities=("a", "b", "c"), values=rng.random((n, 3)), mask=np.ones((n, 3), dtype=bool),
        genuine=np.zeros(n, dtype=bool), probe_ids=ids, gallery_ids=ids,
    )
    test = corrupt(train, CorruptionSpec(proportion=50, seed=1))
    for kind in (ImputerKind.mice_knn, ImputerKind.mice_tree):
        out = imputers.transform(imputers.fit(train, _spec(kind)), test)
        filled = out.values[~test.mask]
        assert filled.min() >= train.values.min() and filled.max() <= train.values.max()


# =========================
# DOCUMENTS
# =========================

def test_fit_transform_matches_fit_then_transform():
    train = corrupt(random_dataset(20, 80, seed=4), CorruptionSpec(proportion=40, seed=2))
    test = corrupt(random_dataset(10, 40, seed=5), CorruptionSpec(proportion=40, seed=3))
    spec = _spec(ImputerKind.mice_bayes)
    model, filled = imputers.fit_transform(train, spec)
    assert np.array_equal(filled.values, imputers.transform(imputers.fit(train, spec), train).values)
    _, other = imputers.fit_transform(train, spec, apply_to=test)
    assert np.array_equal(other.values, imputers.transform(model, test).values)
    assert other.mask.all()


def test_saved_models_transform_identically():
    train = corrupt(correlated_dataset(150, 0.8, seed=14), CorruptionSpec(proportion=20, seed=2))
    test = corrupt(correlated_dataset(50, 0.8, seed=15), CorruptionSpec(proportion=40, seed=3))
    with tempfile.TemporaryDirectory() as tmp:
        for kind in ALL_KINDS:
            model = imputers.fit(train, _spec(kind))
            path = Path(tmp) / f"{kind.value}.json"
            imputers.save_model(model, path)
            loaded = imputers.load_model(path)
            assert isinstance(loaded, MiceModel) == kind.is_mice
            assert imputers.transform(loaded, test).fingerprint() == imputers.transform(model, test).fingerprint()


def test_unknown_document_version_is_rejected():
    model = imputers.fit(table_one(), _spec(ImputerKind.median))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "m.json"
        imputers.save_model(model, path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc["format_version"] = 99
        path.write_text(json.dumps(doc), encoding="utf-8")
        try:
            imputers.load_model(path)
            assert False, "future document version accepted"
        except ConfigError:
            pass


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
