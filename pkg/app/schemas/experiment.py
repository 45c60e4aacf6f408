from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.dataset import CsvSchema, DatasetIn, DatasetSummary, SynthConfig
from app.schemas.fusion import MissingConvention
from app.schemas.imputer import ImputerKind, ImputerSpec
from app.schemas.metrics import CorrSummary
from app.schemas.simulation import MissingTarget


class BalanceMode(str, Enum):
    on = "on"
    off = "off"
    both = "both"


class ImputerSetting(str, Enum):
    # no imputation: fuse the incomplete vectors directly
    none = "none"
    mean = "mean"
    median = "median"
    mice_bayes = "mice_bayes"
    mice_tree = "mice_tree"
    mice_knn = "mice_knn"


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


class TrainingArm(str, Enum):
    unbalanced = "unbalanced"
    balanced = "balanced"
    # label-blind subsample with the balanced arm's size
    reduced = "reduced"


class ExperimentConfig(BaseModel):
    """Study grid; the defaults run all of it (10 proportions,
    3 variants, 5 imputers + none, balanced and unbalanced, 5 trials, FMR 0.1%)."""

    model_config = ConfigDict(extra="forbid")

    input: Optional[str] = None
    # separate development/test files instead of the random split
    test_input: Optional[str] = None
    synth: Optional[SynthConfig] = None
    columns: CsvSchema = CsvSchema()

    train_frac: float = Field(0.8, gt=0.0, lt=1.0)
    proportions: List[int] = Field(default_factory=lambda: list(range(0, 100, 10)))
    variants: List[MissingTarget] = Field(default_factory=lambda: list(MissingTarget))
    imputers: List[ImputerSetting] = Field(default_factory=lambda: list(ImputerSetting))
    balance: BalanceMode = BalanceMode.both
    reduced_arm: bool = False
    trials: int = Field(5, ge=1)
    base_seed: int = 0
    target_fmr: float = Field(0.001, ge=0.0, le=1.0)
    fusion_missing: MissingConvention = MissingConvention.mean
    drop_incomplete: bool = True
    imputer: ImputerSpec = ImputerSpec()

    workers: int = Field(1, ge=1)
    out_dir: Optional[str] = None
    formats: List[OutputFormat] = Field(default_factory=lambda: [OutputFormat.csv, OutputFormat.json])

    @field_validator("proportions")
    @classmethod
    def _check_proportions(cls, value: List[int]) -> List[int]:
        bad = [p for p in value if not 0 <= p <= 90]
        if bad:
            raise ValueError(f"proportions must lie in [0, 90], got {bad}")
        if not value:
            raise ValueError("at least one proportion is required")
        return value

    @model_validator(mode="after")
    def _check_source(self):
        # neither is allowed when the dataset is passed in directly
        if self.input is not None and self.synth is not None:
            raise ValueError("give either 'input' or 'synth', not both")
        if self.test_input is not None and self.input is None:
            raise ValueError("'test_input' requires 'input'")
        return self

    def arms(self) -> List[TrainingArm]:
        arms = {
            BalanceMode.off: [TrainingArm.unbalanced],
            BalanceMode.on: [TrainingArm.balanced],
            BalanceMode.both: [TrainingArm.unbalanced, TrainingArm.balanced],
        }[self.balance]
        if self.reduced_arm:
            arms = arms + [TrainingArm.reduced]
        return arms

    def imputer_spec(self, setting: ImputerSetting) -> Optional[ImputerSpec]:
        if setting is ImputerSetting.none:
            return None
        return self.imputer.model_copy(update={"kind": ImputerKind(setting.value)})


class ArmInfo(BaseModel):
    arm: TrainingArm
    train: Optional[DatasetSummary] = None
    train_fingerprint: Optional[str] = None
    # set when the arm could not be built (e.g. a single-class training partition)
    error: Optional[Dict[str, Any]] = None


class CellRecord(BaseModel):
    arm: TrainingArm
    variant: MissingTarget
    proportion: int
    imputer: ImputerSetting
    status: str = "ok"
    mean_tmr: Optional[float] = None
    std_tmr: Optional[float] = None
    trial_tmr: List[Optional[float]] = []
    # fingerprint of the corrupted test partition, one per trial
    test_fingerprints: List[str] = []
    error: Optional[Dict[str, Any]] = None


class ExperimentReport(BaseModel):
    config: ExperimentConfig
    source: DatasetSummary
    dropped_incomplete: int = 0
    train: DatasetSummary
    test: DatasetSummary
    test_fingerprint: str
    arms: List[ArmInfo]
    correlation: CorrSummary
    cells: List[CellRecord]
    n_failed: int = 0


class ComparisonRow(BaseModel):
    arm: TrainingArm
    imputer: ImputerSetting
    # mean over the trials
    natural_tmr: Optional[float] = None
    natural_std: Optional[float] = None
    natural_trials: List[Optional[float]] = []
    natural_error: Optional[Dict[str, Any]] = None
    simulated_mean: Optional[float] = None
    simulated_std: Optional[float] = None
    simulated_trials: List[Optional[float]] = []
    simulated_error: Optional[Dict[str, Any]] = None


class ComparisonReport(BaseModel):
    natural_missing_pct: float
    matched_proportion: int
    natural: DatasetSummary
    simulated_source: DatasetSummary
    rows: List[ComparisonRow]


class ExperimentRequest(BaseModel):
    """API body: a config plus, optionally, the score table itself."""

    config: ExperimentConfig = ExperimentConfig()
    dataset: Optional[DatasetIn] = None
