from .score_dataset import ClassLabel, ScoreDataset, ScoreVector
from .roc import RocCurve
from .imputer import MiceModel, MiceTrace, UnivariateImputer
