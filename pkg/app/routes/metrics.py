import logging

from fastapi import APIRouter, HTTPException

from app.core.errors import ScoreFillError
from app.schemas.metrics import RocPoint, RocRequest, RocResponse
from app.services import metrics as metrics_service

router = APIRouter(prefix="/metrics", tags=["Metrics"])
logger = logging.getLogger("app.api")


# =========================
# ROC / TMR@FMR
# =========================
@router.post("/roc", response_model=RocResponse)
def compute_roc(payload: RocRequest):
    try:
        curve = metrics_service.roc(payload.scores, payload.labels)
        points = []
        if payload.include_curve:
            points = [RocPoint(threshold=t, fmr=f, tmr=m) for t, f, m in curve.points()]
        return RocResponse(
            n_genuine=curve.n_genuine,
            n_imposter=curve.n_imposter,
            target_fmr=payload.target_fmr,
            tmr_at_fmr=metrics_service.tmr_at_fmr(curve, payload.target_fmr),
            eer=metrics_service.eer(curve),
            curve=points,
        )
    except ScoreFillError as e:
        raise HTTPException(status_code=422, detail=e.to_record())
    except Exception as e:
        logger.exception("roc failed")
        raise HTTPException(status_code=500, detail=str(e))
