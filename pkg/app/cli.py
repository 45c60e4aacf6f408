"""Command-line entry point: ``python -m app <subcommand> [flags]``.

Every subcommand exits 0 on success. Library failures print their error
record as a single JSON line on stderr and exit 1; argparse usage errors
exit 2.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import ConfigError, ParseError, ScoreFillError
from app.core.logging_setup import configure_logging
from app.models.score_dataset import ClassLabel
from app.schemas.dataset import SynthConfig
from app.schemas.experiment import ExperimentConfig, ImputerSetting
from app.schemas.fusion import MissingConvention
from app.schemas.imputer import ImputerKind, ImputerSpec
from app.schemas.simulation import CorruptionSpec, MissingTarget
from app.services import experiment_runner, imputers
from app.services.fusion import fit_norm, fuse_dataset, fused_table, normalize
from app.services.metrics import correlation_summary, eer, roc, tmr_at_fmr
from app.services.missing_sim import corrupt
from app.services.score_data import default_synth_config, load_csv, save_csv, synth_generate
from app.utils import reporting

logger = logging.getLogger("app.cli")


# =========================
# HELPERS
# =========================

def _read_mapping(path: str) -> Dict[str, Any]:
    """JSON or YAML document (JSON is a YAML subset)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", {"path": path})
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}", {"path": path})
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at the top level", {"path": path})
    return data


def _csv_list(raw: Optional[str]) -> Optional[List[str]]:
    if raw is None:
        return None
    return [part.strip() for part in raw.split(",") if part.strip()]


def _out_dir(args) -> Path:
    out = Path(args.out or settings.OUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _synth_config(args) -> SynthConfig:
    if getattr(args, "synth_config", None):
        raw = _read_mapping(args.synth_config)
        if getattr(args, "seed", None) is not None:
            raw["seed"] = args.seed
        return SynthConfig.model_validate(raw)
    seed = args.seed if getattr(args, "seed", None) is not None else settings.DEFAULT_SEED
    return default_synth_config(seed=seed)


def build_experiment_config(args) -> ExperimentConfig:
    """Config file first, then explicit flags on top, then settings defaults."""
    raw: Dict[str, Any] = _read_mapping(args.config) if args.config else {}

    if args.input:
        raw["input"] = args.input
        raw.pop("synth", None)
    if args.synth_config:
        raw["synth"] = _read_mapping(args.synth_config)
        raw.pop("input", None)
    if "input" not in raw and "synth" not in raw:
        raw["synth"] = default_synth_config(seed=settings.DEFAULT_SEED).model_dump()

    overrides = {
        "proportions": [int(p) for p in _csv_list(args.proportions)] if args.proportions else None,
        "variants": _csv_list(args.variants),
        "imputers": _csv_list(args.imputers),
        "trials": args.trials,
        "base_seed": args.seed,
        "balance": args.balance,
        "target_fmr": args.target_fmr,
        "fusion_missing": args.fusion_missing,
        "workers": args.workers,
        "out_dir": args.out,
        "formats": [args.format] if args.format else None,
    }
    if args.reduced_arm:
        overrides["reduced_arm"] = True
    raw.update({k: v for k, v in overrides.items() if v is not None})
    raw.setdefault("base_seed", settings.DEFAULT_SEED)
    raw.setdefault("workers", settings.WORKERS)
    raw.setdefault("out_dir", settings.OUT_DIR)
    return ExperimentConfig.model_validate(raw)


def _load_fused(path: str):
    try:
        frame = pd.read_csv(path, dtype={"probe_id": str, "gallery_id": str, "label": str})
    except FileNotFoundError:
        raise ConfigError(f"input file not found: {path}", {"path": path})
    for column in ("label", "fused"):
        if column not in frame.columns:
            raise ParseError(f"fused score file lacks column {column!r}", line=1)
    try:
        genuine = np.array([ClassLabel.parse(v) is ClassLabel.genuine for v in frame["label"]], dtype=bool)
    except ValueError as exc:
        raise ParseError(str(exc))
    return frame["fused"].to_numpy(dtype=float), genuine


# =========================
# SUBCOMMANDS
# =========================

def cmd_synth(args) -> int:
    dataset = synth_generate(_synth_config(args))
    path = _out_dir(args) / "scores.csv"
    save_csv(dataset, path)
    _emit({"written": str(path), "summary": experiment_runner.summarize_dataset(dataset).model_dump()})
    return 0


def cmd_summarize(args) -> int:
    dataset = load_csv(args.input)
    _emit({
        "summary": experiment_runner.summarize_dataset(dataset).model_dump(),
        "correlation": correlation_summary(dataset).model_dump(),
    })
    return 0


def cmd_simulate(args) -> int:
    dataset = load_csv(args.input)
    seed = args.seed if args.seed is not None else settings.DEFAULT_SEED
    spec = CorruptionSpec(proportion=args.proportion, target=MissingTarget(args.variant), seed=seed)
    corrupted = corrupt(dataset, spec)
    path = _out_dir(args) / "corrupted.csv"
    save_csv(corrupted, path)
    _emit({"written": str(path), "summary": experiment_runner.summarize_dataset(corrupted).model_dump()})
    return 0


def cmd_impute(args) -> int:
    out = _out_dir(args)
    written = []
    if args.model:
        model = imputers.load_model(args.model)
    else:
        train = load_csv(args.input)
        model = imputers.fit(train, ImputerSpec(kind=ImputerKind(args.imputer), knn_k=args.knn_k))
        imputers.save_model(model, out / "imputer.json")
        written.append(out / "imputer.json")
    target = load_csv(args.apply or args.input)
    save_csv(imputers.transform(model, target), out / "imputed.csv")
    written.append(out / "imputed.csv")
    _emit({"written": [str(p) for p in written]})
    return 0


def cmd_fuse(args) -> int:
    dataset = load_csv(args.input)
    reference = load_csv(args.norm_from) if args.norm_from else dataset
    params = fit_norm(reference)
    fused = fuse_dataset(normalize(params, dataset), MissingConvention(args.fusion_missing))
    path = _out_dir(args) / "fused.csv"
    fused_table(dataset, fused).to_csv(path, index=False, lineterminator="\n")
    _emit({"written": str(path), "n_vectors": dataset.n_rows})
    return 0


def cmd_evaluate(args) -> int:
    scores, genuine = _load_fused(args.input)
    curve = roc(scores, genuine)
    result = {
        "n_genuine": curve.n_genuine,
        "n_imposter": curve.n_imposter,
        "target_fmr": args.target_fmr,
        "tmr_at_fmr": tmr_at_fmr(curve, args.target_fmr),
        "eer": eer(curve),
    }
    if args.out:
        result["roc_csv"] = str(reporting.write_roc(curve, _out_dir(args) / "roc.csv"))
    _emit(result)
    return 0


def cmd_run(args) -> int:
    config = build_experiment_config(args)
    report = experiment_runner.run(config)
    written = reporting.write_report(report, config.out_dir, config.formats)
    _emit({"written": [str(p) for p in written], "cells": len(report.cells), "failed": report.n_failed})
    return 0


def cmd_compare_natural(args) -> int:
    config = build_experiment_config(args)
    if config.input is None:
        raise ConfigError("compare-natural needs --input with naturally missing scores")
    dataset = load_csv(config.input, config.columns)
    report = experiment_runner.compare_natural_vs_simulated(dataset, config)
    written = reporting.write_comparison(report, config.out_dir, config.formats)
    _emit({"written": [str(p) for p in written], "matched_proportion": report.matched_proportion})
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port, log_level=settings.LOG_LEVEL.lower())
    return 0


# =========================
# PARSER
# =========================

def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or YAML file mirroring ExperimentConfig")
    p.add_argument("--input", help="score CSV")
    p.add_argument("--synth-config", help="SynthConfig JSON/YAML instead of --input")
    p.add_argument("--proportions", help="comma list, e.g. 0,10,50")
    p.add_argument("--variants", help="comma list of any,genuine,imposter")
    p.add_argument("--imputers", help="comma list of " + ",".join(s.value for s in ImputerSetting))
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--balance", choices=["on", "off", "both"])
    p.add_argument("--reduced-arm", action="store_true", help="add the label-blind reduced training arm")
    p.add_argument("--target-fmr", type=float)
    p.add_argument("--fusion-missing", choices=[c.value for c in MissingConvention])
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=["csv", "json"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scorefill", description="Missing-score imputation study for score-level fusion.")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic score table")
    p.add_argument("--synth-config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("summarize", help="dataset counts and per-class correlation")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("simulate", help="corrupt one score table")
    p.add_argument("--input", required=True)
    p.add_argument("--proportion", type=int, default=10)
    p.add_argument("--variant", choices=[t.value for t in MissingTarget], default="any")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("impute", help="fit (or load) an imputer and fill a score table")
    p.add_argument("--input", required=True, help="training score CSV")
    p.add_argument("--apply", help="score CSV to impute (default: --input)")
    p.add_argument("--imputer", choices=[k.value for k in ImputerKind], default="mean")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--model", help="saved imputer document to reuse instead of fitting")
    p.add_argument("--out")
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("fuse", help="min-max normalise and fuse a score table")
    p.add_argument("--input", required=True)
    p.add_argument("--norm-from", help="training CSV for the min/max (default: --input)")
    p.add_argument("--fusion-missing", choices=[c.value for c in MissingConvention], default="mean")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="ROC, TMR@FMR and EER of a fused score file")
    p.add_argument("--input", required=True)
    p.add_argument("--target-fmr", type=float, default=0.001)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full experiment grid")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare-natural", help="natural vs simulated missingness")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_compare_natural)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default=settings.API_HOST)
    p.add_argument("--port", type=int, default=settings.API_PORT)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except ScoreFillError as exc:
        print(json.dumps(exc.to_record()), file=sys.stderr)
    except ValidationError as exc:
        record = ConfigError("invalid configuration", {"errors": json.loads(exc.json())}).to_record()
        print(json.dumps(record), file=sys.stderr)
    except OSError as exc:
        print(json.dumps({"error": "io_error", "message": str(exc), "details": {}}), file=sys.stderr)
    except Exception as exc:
        logger.exception(f"{args.command} failed")
        record = {"error": "internal_error", "message": f"{type(exc).__name__}: {exc}", "details": {}}
        print(json.dumps(record), file=sys.stderr)
    return 1
