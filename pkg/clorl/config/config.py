import logging
import os
from dotenv import load_dotenv

load_dotenv()

# logging.getLevelNamesMapping() is Python 3.11+; fall back to the same mapping on 3.10
_level_names = getattr(logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel))

CLORL_OUT = os.getenv("CLORL_OUT") or "runs"
CLORL_LOG_DIR = os.getenv("CLORL_LOG_DIR") or "logs"
CLORL_LOG_LEVEL = (os.getenv("CLORL_LOG_LEVEL") or "INFO").upper()

# Validate environment variables
invalid_vars = []
if CLORL_LOG_LEVEL not in _level_names():
    invalid_vars.append("CLORL_LOG_LEVEL")

if invalid_vars:
    raise ValueError(
        f"❌ ERROR: Invalid environment variables!\n"
        f"Invalid: {', '.join(invalid_vars)}\n"
        f"Expected for example:\n"
        f"  CLORL_OUT=runs\n"
        f"  CLORL_LOG_DIR=logs\n"
        f"  CLORL_LOG_LEVEL=INFO"
    )


def output_root() -> str:
    """Output root, re-read so CLORL_OUT set after import still applies"""
    return os.getenv("CLORL_OUT") or CLORL_OUT


def log_dir() -> str:
    return os.getenv("CLORL_LOG_DIR") or CLORL_LOG_DIR


def log_level() -> str:
    level = (os.getenv("CLORL_LOG_LEVEL") or CLORL_LOG_LEVEL).upper()
    if level not in _level_names():
        raise ValueError(f"❌ ERROR: Invalid CLORL_LOG_LEVEL {level!r}, expected e.g. INFO or DEBUG")
    return level
