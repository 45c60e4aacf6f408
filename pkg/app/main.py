import logging
import time

from fastapi import FastAPI, Request

from app.core.config import settings
from app.routes import datasets as datasets_routes
from app.routes import experiments as experiments_routes
from app.routes import health
from app.routes import metrics as metrics_routes

# Logger
_req_logger = logging.getLogger("app.api.request")
_req_logger.setLevel(getattr(logging, settings.LOG_LEVEL, logging.INFO))

# =========================
# FASTAPI APP
# =========================
app = FastAPI(
    title="scorefill",
    version="1.0.0",
    description="Missing-score imputation and score-level fusion study",
    redirect_slashes=False,
)

# =========================
# REQUEST LOGGING
# =========================
@app.middleware("http")
async def request_logging_middleware(request: Request, call_next):
    start = time.perf_counter()
    response = await call_next(request)
    duration_ms = int((time.perf_counter() - start) * 1000)
    _req_logger.info(f"{request.method} {request.url.path} -> {response.status_code} in {duration_ms}ms")
    return response

# =========================
# ROUTES
# =========================
app.include_router(health.router)
app.include_router(datasets_routes.router)
app.include_router(metrics_routes.router)
app.include_router(experiments_routes.router)


@app.get("/")
def root():
    return {"status": "scorefill API running", "docs": "/docs"}
