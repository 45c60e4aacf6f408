from typing import List, Optional

from pydantic import BaseModel, Field


class CorrPart(BaseModel):
    """One correlation flavour for one class; ``None`` marks an undefined pair."""

    method: str
    modalities: List[str]
    matrix: List[List[Optional[float]]]
    mean: Optional[float] = None
    mean_abs: Optional[float] = None
    undefined_pairs: List[List[str]] = []
    n_rows: int = 0


class ClassCorrelation(BaseModel):
    label: str
    pearson: CorrPart
    spearman: CorrPart


class CorrSummary(BaseModel):
    genuine: Optional[ClassCorrelation] = None
    imposter: Optional[ClassCorrelation] = None
    all: Optional[ClassCorrelation] = None


class RocRequest(BaseModel):
    scores: List[float]
    # "genuine"/"imposter" or true/false for genuine
    labels: List[str]
    target_fmr: float = Field(0.001, ge=0.0, le=1.0)
    include_curve: bool = False


class RocPoint(BaseModel):
    threshold: float
    fmr: float
    tmr: float


class RocResponse(BaseModel):
    n_genuine: int
    n_imposter: int
    target_fmr: float
    tmr_at_fmr: float
    eer: float
    curve: List[RocPoint] = []
