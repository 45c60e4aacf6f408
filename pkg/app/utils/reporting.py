import json
import logging
from pathlib import Path
from typing import Iterable, List

import pandas as pd

from app.models.roc import RocCurve
from app.schemas.experiment import ComparisonReport, ExperimentReport, OutputFormat

logger = logging.getLogger("app.reporting")

PLOT_PROPORTION = 50


def save_json(path: Path, payload: object) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _formats(formats: Iterable) -> set:
    return {OutputFormat(f) for f in formats}


# =========================
# GRID
# =========================

def grid_frame(report: ExperimentReport) -> pd.DataFrame:
    """One row per grid cell; per-trial values spread over tmr_trial_<t> columns."""
    trials = report.config.trials
    rows = []
    for cell in report.cells:
        row = {
            "arm": cell.arm.value,
            "variant": cell.variant.value,
            "proportion": cell.proportion,
            "imputer": cell.imputer.value,
            "status": cell.status,
            "mean_tmr": cell.mean_tmr,
            "std_tmr": cell.std_tmr,
        }
        for t in range(trials):
            row[f"tmr_trial_{t + 1}"] = cell.trial_tmr[t] if t < len(cell.trial_tmr) else None
        row["error"] = cell.error["error"] if cell.error else ""
        rows.append(row)
    columns = ["arm", "variant", "proportion", "imputer", "status", "mean_tmr", "std_tmr",
               *[f"tmr_trial_{t + 1}" for t in range(trials)], "error"]
    return pd.DataFrame(rows, columns=columns)


def plot_frame(report: ExperimentReport, proportion: int = PLOT_PROPORTION) -> pd.DataFrame:
    frame = grid_frame(report)
    frame = frame[frame["proportion"] == proportion]
    return frame[["arm", "variant", "imputer", "mean_tmr", "std_tmr"]].reset_index(drop=True)


def write_report(report: ExperimentReport, out_dir, formats: Iterable = ("csv", "json")) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted = _formats(formats)
    written: List[Path] = []

    if OutputFormat.json in wanted:
        path = out / "report.json"
        save_json(path, report.model_dump(mode="json"))
        written.append(path)
        path = out / "correlation.json"
        save_json(path, report.correlation.model_dump(mode="json"))
        written.append(path)

    if OutputFormat.csv in wanted:
        path = out / "grid.csv"
        grid_frame(report).to_csv(path, index=False, lineterminator="\n")
        written.append(path)
        if PLOT_PROPORTION in report.config.proportions:
            path = out / f"plot_tmr_at_{PLOT_PROPORTION}.csv"
            plot_frame(report).to_csv(path, index=False, lineterminator="\n")
            written.append(path)

    logger.info(f"Wrote {len(written)} report file(s) to {out}")
    return written


# =========================
# NATURAL vs SIMULATED
# =========================

def comparison_frame(report: ComparisonReport) -> pd.DataFrame:
    return pd.DataFrame([
        {
            "arm": row.arm.value,
            "imputer": row.imputer.value,
            "natural_tmr": row.natural_tmr,
            "natural_std": row.natural_std,
            "simulated_mean": row.simulated_mean,
            "simulated_std": row.simulated_std,
            "natural_missing_pct": report.natural_missing_pct,
            "matched_proportion": report.matched_proportion,
        }
        for row in report.rows
    ])


def write_comparison(report: ComparisonReport, out_dir, formats: Iterable = ("csv", "json")) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted = _formats(formats)
    written: List[Path] = []
    if OutputFormat.json in wanted:
        path = out / "comparison.json"
        save_json(path, report.model_dump(mode="json"))
        written.append(path)
    if OutputFormat.csv in wanted:
        path = out / "comparison.csv"
        comparison_frame(report).to_csv(path, index=False, lineterminator="\n")
        written.append(path)
    return written


def write_roc(curve: RocCurve, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve.to_frame().to_csv(path, index=False, lineterminator="\n")
    return path
