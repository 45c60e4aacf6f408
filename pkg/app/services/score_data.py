import csv
import io
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from app.core.errors import BalanceError, ConfigError, ParseError, RejectedRowError, SplitError
from app.models.score_dataset import ClassLabel, ScoreDataset
from app.schemas.dataset import CsvSchema, DatasetIn, SynthConfig
from app.utils.seeding import rng_for

logger = logging.getLogger("app.score_data")

MISSING_TOKENS = {"", "nan"}


# ======================================================
# CSV INGEST / EXPORT
# ======================================================

def _parse_score(cell: str, line: int, column: str) -> Tuple[float, bool]:
    token = cell.strip()
    if token.lower() in MISSING_TOKENS:
        return 0.0, False
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric score {token!r} in column {column!r}", line=line)
    if not math.isfinite(value):
        raise ParseError(f"score {token!r} in column {column!r} is not finite", line=line)
    return value, True


def load_csv(path, schema: Optional[CsvSchema] = None) -> ScoreDataset:
    """Read a score table.

    Header: ``probe_id,gallery_id[,label],<modality_1>,...,<modality_m>``.
    Empty cells and ``NaN`` are missing. Without a label column the label is
    genuine iff probe_id == gallery_id; an explicit label always wins.
    """
    schema = schema or CsvSchema()
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not UTF-8 text (byte offset {exc.start})", details={"path": str(path)})
    with io.StringIO(text, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("file is empty (no header row)", line=1)

        for required in (schema.probe_column, schema.gallery_column):
            if required not in header:
                raise ParseError(f"header lacks required column {required!r}", line=1)
        label_col = schema.label_column if schema.label_column in header else None
        if schema.modality_columns:
            modalities = list(schema.modality_columns)
            absent = [c for c in modalities if c not in header]
            if absent:
                raise ParseError(f"header lacks modality column(s) {absent}", line=1)
        else:
            taken = {schema.probe_column, schema.gallery_column, label_col}
            modalities = [h for h in header if h not in taken]
        if len(modalities) < 2:
            raise ParseError("header must name at least two modality columns", line=1)

        pos = {name: i for i, name in enumerate(header)}
        mod_pos = [pos[c] for c in modalities]
        values: List[List[float]] = []
        masks: List[List[bool]] = []
        genuine: List[bool] = []
        probes: List[str] = []
        galleries: List[str] = []
        rejected: List[int] = []

        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", line=line)
            parsed = [_parse_score(row[i], line, header[i]) for i in mod_pos]
            vals = [v for v, _ in parsed]
            present = [p for _, p in parsed]
            if not any(present):
                rejected.append(line)
                continue
            probe = row[pos[schema.probe_column]].strip()
            gallery = row[pos[schema.gallery_column]].strip()
            raw_label = row[pos[label_col]].strip() if label_col else ""
            if raw_label:
                try:
                    is_genuine = ClassLabel.parse(raw_label) is ClassLabel.genuine
                except ValueError:
                    raise ParseError(f"unknown label {raw_label!r}", line=line)
            else:
                is_genuine = probe == gallery
            values.append(vals)
            masks.append(present)
            genuine.append(is_genuine)
            probes.append(probe)
            galleries.append(gallery)

    if rejected:
        raise RejectedRowError(
            f"{len(rejected)} row(s) have every score missing",
            {"lines": rejected[:100], "path": str(path)},
        )

    m = len(modalities)
    dataset = ScoreDataset(
        modalities=tuple(modalities),
        values=np.array(values, dtype=float).reshape(-1, m),
        mask=np.array(masks, dtype=bool).reshape(-1, m),
        genuine=np.array(genuine, dtype=bool),
        probe_ids=np.array(probes, dtype=object),
        gallery_ids=np.array(galleries, dtype=object),
        provenance=str(path),
    )
    logger.info(f"Loaded {dataset.n_rows} score vectors ({m} modalities) from {path}")
    return dataset


def save_csv(dataset: ScoreDataset, path) -> None:
    """Write the documented schema with an explicit label column.

    ``repr`` of a float is the shortest text that parses back to the same
    double, so load(save(D)) reproduces every score exactly.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["probe_id", "gallery_id", "label", *dataset.modalities])
        for i in range(dataset.n_rows):
            cells = [repr(float(v)) if p else "" for v, p in zip(dataset.values[i], dataset.mask[i])]
            label = ClassLabel.genuine.value if dataset.genuine[i] else ClassLabel.imposter.value
            writer.writerow([dataset.probe_ids[i], dataset.gallery_ids[i], label, *cells])
    logger.info(f"Wrote {dataset.n_rows} score vectors to {path}")


def dataset_from_payload(payload: DatasetIn) -> ScoreDataset:
    m = len(payload.modalities)
    values = np.zeros((len(payload.rows), m))
    mask = np.zeros((len(payload.rows), m), dtype=bool)
    genuine = np.zeros(len(payload.rows), dtype=bool)
    for i, row in enumerate(payload.rows):
        if len(row.scores) != m:
            raise ParseError(f"expected {m} scores, found {len(row.scores)}", details={"row": i})
        for j, s in enumerate(row.scores):
            if s is not None and not (isinstance(s, float) and math.isnan(s)):
                values[i, j] = float(s)
                mask[i, j] = True
        if row.label:
            try:
                genuine[i] = ClassLabel.parse(row.label) is ClassLabel.genuine
            except ValueError:
                raise ParseError(f"unknown label {row.label!r}", details={"row": i})
        else:
            genuine[i] = row.probe_id == row.gallery_id
    return ScoreDataset(
        modalities=tuple(payload.modalities),
        values=values,
        mask=mask,
        genuine=genuine,
        probe_ids=np.array([r.probe_id for r in payload.rows], dtype=object),
        gallery_ids=np.array([r.gallery_id for r in payload.rows], dtype=object),
        provenance=payload.provenance or "api",
    )


# ======================================================
# SYNTHETIC SCORES
# ======================================================

def _correlation_factor(corr: np.ndarray, name: str) -> np.ndarray:
    if not np.allclose(corr, corr.T, atol=1e-9):
        raise ConfigError(f"{name} is not symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-9):
        raise ConfigError(f"{name} must have a unit diagonal")
    eigvals, eigvecs = linalg.eigh(corr)
    if eigvals.min() < -1e-10:
        raise ConfigError(f"{name} is not positive semidefinite", {"min_eigenvalue": float(eigvals.min())})
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def _subject_ids(n: int) -> List[str]:
    width = max(4, len(str(n)))
    return [f"S{i:0{width}d}" for i in range(n)]


def default_synth_config(
    seed: int = 0,
    n_genuine: int = 40,
    n_imposter: int = 9960,
    genuine_corr: float = 0.8,
    imposter_corr: float = 0.3,
) -> SynthConfig:
    """Three modalities, 0.4% genuine, correlated genuine class."""
    def equicorr(r: float) -> List[List[float]]:
        return [[1.0 if i == j else r for j in range(3)] for i in range(3)]

    return SynthConfig(
        m=3,
        n_genuine=n_genuine,
        n_imposter=n_imposter,
        genuine_means=[0.70, 0.65, 0.75],
        imposter_means=[0.30, 0.35, 0.25],
        genuine_corr=equicorr(genuine_corr),
        imposter_corr=equicorr(imposter_corr),
        noise_scale=[0.12, 0.12, 0.12],
        seed=seed,
        modality_names=["face", "finger", "iris"],
    )


def synth_generate(config: SynthConfig) -> ScoreDataset:
    """Two multivariate-normal classes, clipped to [0, 1], reproducible from the seed."""
    m = config.m
    factors = {
        "genuine": _correlation_factor(np.asarray(config.genuine_corr, dtype=float), "genuine_corr"),
        "imposter": _correlation_factor(np.asarray(config.imposter_corr, dtype=float), "imposter_corr"),
    }
    noise = np.asarray(config.noise_scale, dtype=float)
    rng = rng_for(config.seed)

    def draw(n: int, means: List[float], factor: np.ndarray) -> np.ndarray:
        z = rng.standard_normal((n, m))
        return np.clip(np.asarray(means, dtype=float) + (z @ factor.T) * noise, 0.0, 1.0)

    gen = draw(config.n_genuine, config.genuine_means, factors["genuine"])
    imp = draw(config.n_imposter, config.imposter_means, factors["imposter"])

    n_subjects = config.n_subjects or max(config.n_genuine, 2)
    subjects = _subject_ids(n_subjects)
    probes: List[str] = []
    galleries: List[str] = []
    for i in range(config.n_genuine):
        s = subjects[i % n_subjects]
        probes.append(s)
        galleries.append(s)
    for j in range(config.n_imposter):
        p = j % n_subjects
        probes.append(subjects[p])
        if n_subjects > 1:
            offset = 1 + (j // n_subjects) % (n_subjects - 1)
            galleries.append(subjects[(p + offset) % n_subjects])
        else:
            galleries.append(f"{subjects[p]}-other")

    n = config.n_genuine + config.n_imposter
    dataset = ScoreDataset(
        modalities=tuple(config.names()),
        values=np.vstack([gen, imp]) if n else np.zeros((0, m)),
        mask=np.ones((n, m), dtype=bool),
        genuine=np.concatenate([np.ones(config.n_genuine, dtype=bool), np.zeros(config.n_imposter, dtype=bool)]),
        probe_ids=np.array(probes, dtype=object),
        gallery_ids=np.array(galleries, dtype=object),
        provenance=f"synth(seed={config.seed})",
    )
    logger.debug(f"Synthesised {config.n_genuine} genuine + {config.n_imposter} imposter vectors")
    return dataset


# ======================================================
# PARTITIONS
# ======================================================

def split_train_test(dataset: ScoreDataset, train_frac: float, seed: int) -> Tuple[ScoreDataset, ScoreDataset]:
    """Probe-subject-disjoint split; the gallery side is shared."""
    if not 0.0 < train_frac < 1.0:
        raise SplitError("train_frac must lie strictly between 0 and 1", {"train_frac": train_frac})
    ids = np.unique(dataset.probe_ids.astype(str))
    if ids.size < 2:
        raise SplitError("need at least two distinct probe ids to split", {"probe_ids": int(ids.size)})
    rng = rng_for(seed)
    order = rng.permutation(ids.size)
    n_train = min(max(int(round(train_frac * ids.size)), 1), ids.size - 1)
    train_ids = ids[order[:n_train]]
    in_train = np.isin(dataset.probe_ids.astype(str), train_ids)
    train = dataset.take(np.flatnonzero(in_train), provenance=f"{dataset.provenance}:train")
    test = dataset.take(np.flatnonzero(~in_train), provenance=f"{dataset.provenance}:test")
    logger.info(f"Split {ids.size} probe subjects -> {n_train} train / {ids.size - n_train} test "
                f"({train.n_rows} / {test.n_rows} vectors)")
    return train, test


def balance_classes(dataset: ScoreDataset, seed: int) -> ScoreDataset:
    """Down-sample the larger class (without replacement) to the smaller class size."""
    gen_idx = np.flatnonzero(dataset.genuine)
    imp_idx = np.flatnonzero(~dataset.genuine)
    if gen_idx.size == 0 or imp_idx.size == 0:
        raise BalanceError(
            "both classes must be present to balance",
            {"n_genuine": int(gen_idx.size), "n_imposter": int(imp_idx.size)},
        )
    n = min(gen_idx.size, imp_idx.size)
    minority, majority = (gen_idx, imp_idx) if gen_idx.size <= imp_idx.size else (imp_idx, gen_idx)
    rng = rng_for(seed)
    sampled = rng.choice(majority, size=n, replace=False)
    keep = np.sort(np.concatenate([minority, sampled]))
    return dataset.take(keep, provenance=f"{dataset.provenance}:balanced")


def reduce_training(dataset: ScoreDataset, n_rows: int, seed: int) -> ScoreDataset:
    """Label-blind random subsample of ``n_rows`` vectors (the size-only control arm)."""
    n_rows = max(0, min(int(n_rows), dataset.n_rows))
    rng = rng_for(seed)
    keep = np.sort(rng.choice(dataset.n_rows, size=n_rows, replace=False))
    return dataset.take(keep, provenance=f"{dataset.provenance}:reduced")


def listwise_delete(dataset: ScoreDataset) -> ScoreDataset:
    return dataset.take(np.flatnonzero(dataset.complete_mask))
