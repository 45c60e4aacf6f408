from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CsvSchema(BaseModel):
    # column names in the score file header
    probe_column: str = "probe_id"
    gallery_column: str = "gallery_id"
    # when absent (or missing from the header) labels come from probe == gallery
    label_column: Optional[str] = "label"
    # None = every remaining header column is a modality
    modality_columns: Optional[List[str]] = None


class SynthConfig(BaseModel):
    """Parameters of the synthetic two-class score generator."""

    model_config = ConfigDict(extra="forbid")

    m: int = Field(3, ge=2)
    n_genuine: int = Field(40, ge=0)
    n_imposter: int = Field(9960, ge=0)
    genuine_means: List[float]
    imposter_means: List[float]
    genuine_corr: List[List[float]]
    imposter_corr: List[List[float]]
    noise_scale: List[float]
    seed: int = 0
    # probe subjects; default max(n_genuine, 2)
    n_subjects: Optional[int] = Field(None, ge=1)
    modality_names: Optional[List[str]] = None

    @model_validator(mode="after")
    def _check_shapes(self):
        m = self.m
        for name in ("genuine_means", "imposter_means", "noise_scale"):
            if len(getattr(self, name)) != m:
                raise ValueError(f"{name} must have length m={m}")
        for name in ("genuine_corr", "imposter_corr"):
            mat = getattr(self, name)
            if len(mat) != m or any(len(r) != m for r in mat):
                raise ValueError(f"{name} must be an {m}x{m} matrix")
        if any(s < 0 for s in self.noise_scale):
            raise ValueError("noise_scale entries must be >= 0")
        if self.modality_names is not None and len(self.modality_names) != m:
            raise ValueError(f"modality_names must have length m={m}")
        return self

    def names(self) -> List[str]:
        return list(self.modality_names or [f"m{j + 1}" for j in range(self.m)])


class DatasetSummary(BaseModel):
    provenance: str = ""
    modalities: List[str] = []
    n_modalities: int = 0
    n_vectors: int = 0
    n_genuine: int = 0
    n_imposter: int = 0
    genuine_pct: float = 0.0
    n_incomplete: int = 0
    natural_missing_pct: float = 0.0
    missing_cell_pct: float = 0.0
    n_probe_subjects: int = 0


class ScoreRowIn(BaseModel):
    probe_id: str
    gallery_id: str
    label: Optional[str] = None
    # null = missing score
    scores: List[Optional[float]]


class DatasetIn(BaseModel):
    modalities: List[str]
    rows: List[ScoreRowIn] = []
    provenance: Optional[str] = "api"
