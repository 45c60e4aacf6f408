import os
from pathlib import Path

from dotenv import load_dotenv


# If a local .env file exists in the project folder, load it into os.environ.
# override=True so the local .env is authoritative for development runs.
env_path = Path(__file__).resolve().parents[2] / ".env"
if env_path.exists():
    load_dotenv(env_path, override=True)


def _env_bool(name: str, default: str) -> bool:
    return str(os.getenv(name, default)).strip().lower() in {"1", "true", "yes", "on"}


class Settings:
    """Environment-driven defaults for the CLI, the runner and the API.

    Experiment parameters proper live in ExperimentConfig; these are only the
    process-level knobs (logging, default seed, worker count, output folder).
    """

    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()

    # Base seed used when neither the config file nor --seed provide one
    DEFAULT_SEED: int = int(os.getenv("SCOREFILL_SEED", "0"))
    # Parallel grid jobs (joblib); 1 keeps everything in-process
    WORKERS: int = int(os.getenv("SCOREFILL_WORKERS", "1"))
    OUT_DIR: str = os.getenv("SCOREFILL_OUT_DIR", "results")
    # tqdm progress bars for long grid runs
    PROGRESS: bool = _env_bool("SCOREFILL_PROGRESS", "1")

    API_HOST: str = os.getenv("SCOREFILL_API_HOST", "127.0.0.1")
    API_PORT: int = int(os.getenv("SCOREFILL_API_PORT", "8000"))


settings = Settings()
