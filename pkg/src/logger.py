"""Logging configuration"""

import logging
import os
from datetime import datetime

import colorlog
from dotenv import load_dotenv

load_dotenv()


def setup_logger(name="lattice_loc", log_level=None):
    """Setup and configure logger

    Console output goes to stderr so that reports written to stdout stay
    machine-readable. A dated log file is added only when
    LATTICE_LOC_LOG_DIR is set.
    """
    if log_level is None:
        log_level = getattr(logging, os.getenv('LATTICE_LOC_LOG_LEVEL', 'INFO').upper(), logging.INFO)

    # Create logger
    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    # Remove existing handlers
    logger.handlers = []
    logger.propagate = False

    # Console handler
    console_handler = colorlog.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(colorlog.ColoredFormatter(
        '%(log_color)s%(asctime)s - %(name)s - %(levelname)s%(reset)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'bold_red',
        },
    ))
    logger.addHandler(console_handler)

    # File handler
    log_dir = os.getenv('LATTICE_LOC_LOG_DIR')
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, f'lattice_loc_{datetime.now().strftime("%Y%m%d")}.log')
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(log_level)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))
        logger.addHandler(file_handler)

    return logger
