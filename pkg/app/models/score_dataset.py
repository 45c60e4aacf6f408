import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Sequence

import numpy as np

from app.core.errors import ConfigError, RejectedRowError


class ClassLabel(str, Enum):
    genuine = "genuine"
    imposter = "imposter"

    @classmethod
    def parse(cls, raw: str) -> "ClassLabel":
        value = str(raw).strip().lower()
        # "impostor" is the other common spelling in score files
        if value == "impostor":
            value = "imposter"
        return cls(value)


@dataclass(frozen=True)
class ScoreVector:
    """One probe-vs-gallery comparison; ``None`` marks a missing score."""

    probe_id: str
    gallery_id: str
    label: ClassLabel
    scores: tuple


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScoreDataset:
    """Immutable score table: values plus an explicit per-cell presence mask.

    ``values[i, j]`` is only meaningful where ``mask[i, j]`` is True; missing
    cells hold 0.0 and are never read.
    """

    modalities: tuple
    values: np.ndarray
    mask: np.ndarray
    genuine: np.ndarray
    probe_ids: np.ndarray
    gallery_ids: np.ndarray
    provenance: str = ""
    _fingerprint: List[str] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        mods = tuple(str(m) for m in self.modalities)
        if len(mods) < 2:
            raise ConfigError("a score dataset needs at least two modalities", {"modalities": list(mods)})
        if any(not m.strip() for m in mods):
            raise ConfigError("modality names must be non-empty", {"modalities": list(mods)})
        if len(set(mods)) != len(mods):
            raise ConfigError("modality names must be unique", {"modalities": list(mods)})

        values = np.array(self.values, dtype=float, copy=True).reshape(-1, len(mods))
        mask = np.array(self.mask, dtype=bool, copy=True).reshape(-1, len(mods))
        n = values.shape[0]
        genuine = np.array(self.genuine, dtype=bool, copy=True).reshape(n)
        probe_ids = np.array([str(p) for p in self.probe_ids], dtype=object).reshape(n)
        gallery_ids = np.array([str(g) for g in self.gallery_ids], dtype=object).reshape(n)

        if mask.shape != values.shape:
            raise ConfigError("mask shape does not match score shape")
        if n and not np.all(np.isfinite(values[mask])):
            raise ConfigError("present scores must be finite real numbers")
        empty = np.flatnonzero(~mask.any(axis=1)) if n else np.array([], dtype=int)
        if empty.size:
            raise RejectedRowError(
                f"{empty.size} row(s) have every score missing",
                {"rows": [int(i) for i in empty[:50]]},
            )
        values[~mask] = 0.0

        object.__setattr__(self, "modalities", mods)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "genuine", _frozen(genuine))
        object.__setattr__(self, "probe_ids", _frozen(probe_ids))
        object.__setattr__(self, "gallery_ids", _frozen(gallery_ids))

    # =========================
    # Shape / class helpers
    # =========================
    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_modalities(self) -> int:
        return len(self.modalities)

    @property
    def complete_mask(self) -> np.ndarray:
        return self.mask.all(axis=1)

    @property
    def n_genuine(self) -> int:
        return int(self.genuine.sum())

    @property
    def n_imposter(self) -> int:
        return self.n_rows - self.n_genuine

    def labels(self) -> List[ClassLabel]:
        return [ClassLabel.genuine if g else ClassLabel.imposter for g in self.genuine]

    def class_mask(self, label: Optional[ClassLabel]) -> np.ndarray:
        if label is None:
            return np.ones(self.n_rows, dtype=bool)
        if ClassLabel(label) is ClassLabel.genuine:
            return self.genuine.copy()
        return ~self.genuine

    def row(self, i: int) -> ScoreVector:
        scores = tuple(float(v) if p else None for v, p in zip(self.values[i], self.mask[i]))
        label = ClassLabel.genuine if self.genuine[i] else ClassLabel.imposter
        return ScoreVector(str(self.probe_ids[i]), str(self.gallery_ids[i]), label, scores)

    def iter_rows(self) -> Iterator[ScoreVector]:
        for i in range(self.n_rows):
            yield self.row(i)

    # =========================
    # Derivations (always new objects)
    # =========================
    def take(self, indices: Sequence[int], provenance: Optional[str] = None) -> "ScoreDataset":
        idx = np.asarray(indices, dtype=int)
        return ScoreDataset(
            modalities=self.modalities,
            values=self.values[idx],
            mask=self.mask[idx],
            genuine=self.genuine[idx],
            probe_ids=self.probe_ids[idx],
            gallery_ids=self.gallery_ids[idx],
            provenance=self.provenance if provenance is None else provenance,
        )

    def class_subset(self, label: Optional[ClassLabel]) -> "ScoreDataset":
        return self.take(np.flatnonzero(self.class_mask(label)))

    def with_scores(self, values: np.ndarray, mask: np.ndarray, provenance: Optional[str] = None) -> "ScoreDataset":
        return ScoreDataset(
            modalities=self.modalities,
            values=values,
            mask=mask,
            genuine=self.genuine,
            probe_ids=self.probe_ids,
            gallery_ids=self.gallery_ids,
            provenance=self.provenance if provenance is None else provenance,
        )

    def with_labels(self, genuine: np.ndarray) -> "ScoreDataset":
        return ScoreDataset(
            modalities=self.modalities,
            values=self.values,
            mask=self.mask,
            genuine=genuine,
            probe_ids=self.probe_ids,
            gallery_ids=self.gallery_ids,
            provenance=self.provenance,
        )

    @classmethod
    def empty(cls, modalities: Sequence[str], provenance: str = "") -> "ScoreDataset":
        m = len(modalities)
        return cls(
            modalities=tuple(modalities),
            values=np.zeros((0, m)),
            mask=np.zeros((0, m), dtype=bool),
            genuine=np.zeros(0, dtype=bool),
            probe_ids=np.array([], dtype=object),
            gallery_ids=np.array([], dtype=object),
            provenance=provenance,
        )

    # =========================
    # Comparison
    # =========================
    def fingerprint(self) -> str:
        """sha256 over modalities, ids, labels, mask and present values."""
        if self._fingerprint:
            return self._fingerprint[0]
        h = hashlib.sha256()
        h.update("\x1f".join(self.modalities).encode("utf-8"))
        h.update("\x1e".join(self.probe_ids.tolist()).encode("utf-8"))
        h.update("\x1e".join(self.gallery_ids.tolist()).encode("utf-8"))
        h.update(self.genuine.astype(np.uint8).tobytes())
        h.update(self.mask.astype(np.uint8).tobytes())
        h.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        digest = h.hexdigest()
        self._fingerprint.append(digest)
        return digest

    def equals(self, other: "ScoreDataset", atol: float = 0.0) -> bool:
        if not isinstance(other, ScoreDataset):
            return False
        if self.modalities != other.modalities or self.n_rows != other.n_rows:
            return False
        if not (np.array_equal(self.mask, other.mask) and np.array_equal(self.genuine, other.genuine)):
            return False
        if not (np.array_equal(self.probe_ids, other.probe_ids) and np.array_equal(self.gallery_ids, other.gallery_ids)):
            return False
        diff = np.abs(self.values[self.mask] - other.values[other.mask])
        return bool(diff.size == 0 or diff.max() <= atol)
