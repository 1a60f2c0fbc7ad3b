# settings.py
import logging.config
import os
from pathlib import Path

import sentry_sdk
import torch
from dotenv import load_dotenv
from sentry_sdk.integrations.logging import LoggingIntegration

# ---------------------- PATHS & ENV ----------------------
BASE_DIR = Path(__file__).resolve().parent.parent
load_dotenv()

# ---------------------- OUTPUT ----------------------
OUTPUT_DIR = Path(os.getenv("IDOL_OUTPUT_DIR", BASE_DIR / "runs"))

# ---------------------- NUMERICS ----------------------
# All accumulation in double precision; one intra-op thread keeps reductions bit-reproducible
TORCH_DTYPE = torch.float64
TORCH_NUM_THREADS = int(os.getenv("TORCH_NUM_THREADS", "1"))
torch.set_num_threads(TORCH_NUM_THREADS)

# ---------------------- CELERY ----------------------
# Cells run in-process unless a broker is configured explicitly
CELERY_BROKER_URL = os.getenv("CELERY_BROKER_URL", "memory://")
CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", "cache+memory://")
CELERY_TASK_ALWAYS_EAGER = os.getenv("CELERY_ALWAYS_EAGER", "True") == "True"
CELERY_ACCEPT_CONTENT = ["json"]
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"

# ---------------------- LOGGING ----------------------
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": LOG_LEVEL,
    },
}


def configure_logging():
    logging.config.dictConfig(LOGGING)


# ---------------------- SENTRY ----------------------
SENTRY_DSN = os.getenv("SENTRY_DSN")

if SENTRY_DSN:
    sentry_sdk.init(
        dsn=SENTRY_DSN,
        integrations=[LoggingIntegration(level=logging.INFO, event_level=logging.ERROR)],
        traces_sample_rate=0.0,
        send_default_pii=False,
        environment=os.getenv("ENV", "local"),
    )
