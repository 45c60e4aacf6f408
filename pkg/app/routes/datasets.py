import logging

from fastapi import APIRouter, HTTPException

from app.core.errors import ScoreFillError
from app.schemas.dataset import DatasetIn
from app.services.experiment_runner import summarize_dataset
from app.services.metrics import correlation_summary
from app.services.score_data import dataset_from_payload

router = APIRouter(prefix="/datasets", tags=["Datasets"])
logger = logging.getLogger("app.api")


# =========================
# SUMMARY
# =========================
@router.post("/summary")
def dataset_summary(payload: DatasetIn):
    try:
        dataset = dataset_from_payload(payload)
        return {
            "summary": summarize_dataset(dataset),
            "correlation": correlation_summary(dataset),
        }
    except ScoreFillError as e:
        raise HTTPException(status_code=422, detail=e.to_record())
    except Exception as e:
        logger.exception("dataset summary failed")
        raise HTTPException(status_code=500, detail=str(e))
