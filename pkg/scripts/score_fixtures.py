import sys, os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

import numpy as np

from app.models.score_dataset import ScoreDataset

TABLE_ONE_CSV = (
    "probe_id,gallery_id,Face,Fingerprint,Iris\n"
    "Subject 1,Subject 1,,0.74,1.00\n"
    "Subject 2,Subject 2,0.41,0.89,0.47\n"
    "Subject 3,Subject 3,0.27,,0.03\n"
    "Subject 4,Subject 4,0.85,0.00,0.31\n"
)


def table_one() -> ScoreDataset:
    """The four-subject example with one missing Face and one missing Fingerprint score."""
    values = np.array([
        [0.0, 0.74, 1.00],
        [0.41, 0.89, 0.47],
        [0.27, 0.0, 0.03],
        [0.85, 0.00, 0.31],
    ])
    mask = np.array([
        [False, True, True],
        [True, True, True],
        [True, False, True],
        [True, True, True],
    ])
    ids = np.array([f"Subject {i}" for i in range(1, 5)], dtype=object)
    return ScoreDataset(
        modalities=("Face", "Fingerprint", "Iris"),
        values=values,
        mask=mask,
        genuine=np.ones(4, dtype=bool),
        probe_ids=ids,
        gallery_ids=ids,
        provenance="table-one",
    )


def random_dataset(n_genuine: int, n_imposter: int, m: int = 3, seed: int = 0, n_subjects: int = 50) -> ScoreDataset:
    """Complete uniform scores; genuine rows sit a little higher."""
    rng = np.random.default_rng(seed)
    n = n_genuine + n_imposter
    genuine = np.zeros(n, dtype=bool)
    genuine[:n_genuine] = True
    values = rng.random((n, m)) * 0.6 + np.where(genuine, 0.4, 0.0)[:, None]
    probes = np.array([f"P{i % n_subjects:04d}" for i in range(n)], dtype=object)
    galleries = np.where(genuine, probes, np.array([f"G{i % 7}" for i in range(n)], dtype=object))
    return ScoreDataset(
        modalities=tuple(f"m{j + 1}" for j in range(m)),
        values=values,
        mask=np.ones((n, m), dtype=bool),
        genuine=genuine,
        probe_ids=probes,
        gallery_ids=galleries,
        provenance=f"random(seed={seed})",
    )


def correlated_dataset(n: int, corr: float, seed: int = 0, m: int = 3, genuine_share: float = 0.5) -> ScoreDataset:
    """Equicorrelated Gaussian scores (no clipping) for imputation-quality checks."""
    rng = np.random.default_rng(seed)
    cov = np.full((m, m), corr) + np.eye(m) * (1.0 - corr)
    values = rng.multivariate_normal(np.full(m, 0.5), cov * 0.01, size=n)
    genuine = np.zeros(n, dtype=bool)
    genuine[: int(round(n * genuine_share))] = True
    probes = np.array([f"P{i % 100:03d}" for i in range(n)], dtype=object)
    return ScoreDataset(
        modalities=tuple(f"m{j + 1}" for j in range(m)),
        values=values,
        mask=np.ones((n, m), dtype=bool),
        genuine=genuine,
        probe_ids=probes,
        gallery_ids=probes,
        provenance=f"correlated({corr})",
    )
