import logging

from app.core.config import settings


_configured = False


def configure_logging(level: str | None = None) -> None:
    """Install a single stderr handler on the ``app`` logger tree (CLI use).

    The API does not call this; uvicorn already owns the root handlers there.
    """
    global _configured
    root = logging.getLogger("app")
    root.setLevel(getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO))
    if _configured:
        return
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s [%(name)s] %(message)s"))
    root.addHandler(handler)
    root.propagate = False
    _configured = True
