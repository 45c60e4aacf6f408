import sys, os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))
sys.path.append(os.path.dirname(__file__))

import numpy as np

from app.core.errors import FitError, FusionError
from app.models.score_dataset import ClassLabel, ScoreDataset, ScoreVector
from app.schemas.fusion import MissingConvention
from app.services.fusion import fit_norm, fuse, fuse_dataset, fused_table, normalize
from app.services.metrics import roc, tmr_at_fmr
from score_fixtures import random_dataset, table_one


def _dataset(rows, mask=None) -> ScoreDataset:
    values = np.asarray(rows, dtype=float)
    n = values.shape[0]
    ids = np.array([f"S{i}" for i in range(n)], dtype=object)
    return ScoreDataset(
        modalities=tuple(f"m{j}" for j in range(values.shape[1])),
        values=values,
        mask=np.ones_like(values, dtype=bool) if mask is None else mask,
        genuine=np.arange(n) % 2 == 0,
        probe_ids=ids,
        gallery_ids=ids,
    )


def _vector(*scores) -> ScoreVector:
    return ScoreVector("p", "g", ClassLabel.genuine, tuple(scores))


def test_fit_norm_on_simple_and_table_one_columns():
    params = fit_norm(_dataset([[0.0, 1.0], [0.5, 2.0], [1.0, 3.0]]))
    assert params.minimum.tolist() == [0.0, 1.0] and params.maximum.tolist() == [1.0, 3.0]
    t1 = fit_norm(table_one())
    assert t1.minimum[1] == 0.00 and t1.maximum[1] == 0.89


def test_normalize_table_one_fingerprint():
    ds = table_one()
    out = normalize(fit_norm(ds), ds)
    assert abs(out.values[0, 1] - 0.8315) < 1e-4
    assert np.array_equal(out.mask, ds.mask)


def test_normalize_endpoints_and_clamp():
    params = fit_norm(_dataset([[0.2, 0.0], [0.6, 4.0]]))
    out = normalize(params, _dataset([[0.2, 4.0], [0.9, -1.0]]))
    assert out.values[0].tolist() == [0.0, 1.0]
    assert out.values[1].tolist() == [1.0, 0.0]


def test_degenerate_modality_maps_to_half():
    params = fit_norm(_dataset([[0.3, 0.1], [0.3, 0.9]]))
    assert params.degenerate.tolist() == [True, False]
    out = normalize(params, _dataset([[0.7, 0.5]]))
    assert out.values[0, 0] == 0.5


def test_fit_norm_needs_an_observed_score():
    mask = np.array([[False, True], [False, True]])
    try:
        fit_norm(_dataset([[0.0, 0.1], [0.0, 0.2]], mask))
        assert False, "empty modality accepted"
    except FitError:
        pass


def test_fuse_mean_of_present_scores():
    assert abs(fuse(_vector(0.2, 0.4, 0.6)) - 0.4) < 1e-12
    assert abs(fuse(_vector(0.7, 0.7, 0.7)) - 0.7) < 1e-12
    assert abs(fuse(_vector(0.2, None, 0.6)) - 0.4) < 1e-12
    assert abs(fuse(_vector(0.6, 0.2, 0.4)) - fuse(_vector(0.2, 0.4, 0.6))) < 1e-12
    try:
        fuse(_vector(None, None))
        assert False, "all-missing vector fused"
    except FusionError:
        pass


def test_fuse_dataset_matches_per_vector_rule():
    ds = normalize(fit_norm(table_one()), table_one())
    fused = fuse_dataset(ds)
    expected = [fuse(v) for v in ds.iter_rows()]
    assert np.allclose(fused, expected, atol=1e-15)
    assert np.all((fused >= 0.0) & (fused <= 1.0))


def test_sum_and_mean_rank_complete_vectors_identically():
    ds = random_dataset(40, 400, seed=3)
    normed = normalize(fit_norm(ds), ds)
    as_mean = fuse_dataset(normed, MissingConvention.mean)
    as_sum = fuse_dataset(normed, MissingConvention.sum)
    assert np.array_equal(np.argsort(as_mean, kind="stable"), np.argsort(as_sum, kind="stable"))
    target = 0.01
    assert tmr_at_fmr(roc(as_mean, ds.genuine), target) == tmr_at_fmr(roc(as_sum, ds.genuine), target)


def test_normalize_is_idempotent_on_unit_range_data():
    ds = _dataset([[0.0, 1.0], [1.0, 0.0], [0.25, 0.5]])
    once = normalize(fit_norm(ds), ds)
    assert once.equals(ds)


def test_fused_table_columns():
    ds = normalize(fit_norm(table_one()), table_one())
    frame = fused_table(ds, fuse_dataset(ds))
    assert list(frame.columns) == ["probe_id", "gallery_id", "label", "fused"]
    assert frame["label"].tolist() == ["genuine"] * 4


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
