import logging

from fastapi import APIRouter, HTTPException

from app.core.errors import ComparisonError, ScoreFillError
from app.schemas.experiment import ComparisonReport, ExperimentReport, ExperimentRequest
from app.services import experiment_runner
from app.services.score_data import dataset_from_payload

router = APIRouter(prefix="/experiments", tags=["Experiments"])
logger = logging.getLogger("app.api")


# =========================
# GRID RUN
# =========================
# sync handlers: FastAPI runs them in its threadpool
@router.post("/run", response_model=ExperimentReport)
def run_experiment(payload: ExperimentRequest):
    try:
        source = dataset_from_payload(payload.dataset) if payload.dataset else None
        return experiment_runner.run(payload.config, source=source, progress=False)
    except ScoreFillError as e:
        raise HTTPException(status_code=422, detail=e.to_record())
    except Exception as e:
        logger.exception("experiment run failed")
        raise HTTPException(status_code=500, detail=str(e))


# =========================
# NATURAL vs SIMULATED
# =========================
@router.post("/compare-natural", response_model=ComparisonReport)
def compare_natural(payload: ExperimentRequest):
    try:
        config = payload.config
        if payload.dataset is not None:
            dataset = dataset_from_payload(payload.dataset)
        elif config.input is not None or config.synth is not None:
            dataset = experiment_runner.load_source(config)
        else:
            raise ComparisonError("send a dataset or set config.input")
        return experiment_runner.compare_natural_vs_simulated(dataset, config)
    except ScoreFillError as e:
        raise HTTPException(status_code=422, detail=e.to_record())
    except Exception as e:
        logger.exception("natural comparison failed")
        raise HTTPException(status_code=500, detail=str(e))
