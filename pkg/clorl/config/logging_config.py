import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

from clorl.config import config

_HANDLER_TAG = "_clorl_handler"


def setup_logging(log_dir: Optional[str] = None, level: Optional[str] = None):
    """
    Setup logging configuration for the toolkit
    - Console handler: display in terminal
    - File handler: save to <log_dir>/app.log
    - Error handler: save errors to <log_dir>/error.log
    Calling it again replaces the handlers it installed before.
    """
    log_dir = log_dir or config.log_dir()
    level = level or config.log_level()
    os.makedirs(log_dir, exist_ok=True)

    # Log format
    log_format = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(log_format)

    # File handler for all logs (rotates when reaches 10MB, keeps 5 backup files)
    file_handler = RotatingFileHandler(
        os.path.join(log_dir, 'app.log'),
        maxBytes=10*1024*1024,  # 10MB
        backupCount=5,
        encoding='utf-8'
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(log_format)

    # File handler for errors only
    error_handler = RotatingFileHandler(
        os.path.join(log_dir, 'error.log'),
        maxBytes=10*1024*1024,  # 10MB
        backupCount=5,
        encoding='utf-8'
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(log_format)

    # Configure root logger
    logger = logging.getLogger()
    logger.setLevel(level)
    for handler in list(logger.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            logger.removeHandler(handler)
            handler.close()
    for handler in (console_handler, file_handler, error_handler):
        setattr(handler, _HANDLER_TAG, True)
        logger.addHandler(handler)

    return logger

