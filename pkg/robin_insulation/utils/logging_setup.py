"""
Logging setup for the insulation laboratory.
"""

import logging
import os
import sys
import typing as t
from datetime import datetime


def setup_logging(level=logging.INFO, log_dir: t.Optional[str] = None):
    """
    Set up logging for the application.

    Args:
        level: Logging level (default: INFO)
        log_dir: Optional directory for a dated log file

    Returns:
        Logger instance
    """
    # Define the log format
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    # Get the root logger and drop handlers left over from earlier calls
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    root_logger.setLevel(level)
    formatter = logging.Formatter(log_format)

    log_file = None
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        timestamp = datetime.now().strftime("%Y-%m-%d")
        log_file = os.path.join(log_dir, f"robin_insulation_{timestamp}.log")
        try:
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
        except Exception as e:
            # Fallback: console only
            print(f"Error setting up file logging: {e}", file=sys.stderr)
            log_file = None

    # Console goes to stderr: stdout carries the result tables
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    root_logger.addHandler(stream_handler)

    logger = logging.getLogger()
    logger.debug("Logging initialized")
    if log_file:
        logger.info(f"Log file: {log_file}")

    return logger
