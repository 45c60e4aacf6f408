from dataclasses import dataclass

import numpy as np
import pandas as pd


@dataclass(frozen=True)
class RocCurve:
    """Exact step ROC; rule is ``score >= threshold`` => match.

    Thresholds are strictly increasing, so ``fmr`` and ``tmr`` are non-increasing.
    """

    thresholds: np.ndarray
    fmr: np.ndarray
    tmr: np.ndarray
    n_genuine: int
    n_imposter: int

    def points(self):
        return list(zip(self.thresholds.tolist(), self.fmr.tolist(), self.tmr.tolist()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"threshold": self.thresholds, "fmr": self.fmr, "tmr": self.tmr})
