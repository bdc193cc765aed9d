"""
utils
=====

Logging and worker-pool helpers shared by the pipeline stages.
"""

import functools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from logging.config import dictConfig
from typing import (
    Callable,
    Iterable,
    List,
    Optional,
    TypeVar,
)

__all__ = ["log", "set_verbose", "worker_count", "parallel_map"]

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "EPIFORGE_THREADS"

_verbose = False


@functools.lru_cache()
def _configure():
    red = "\033[91m"
    endc = "\033[0m"

    cfg = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "stdout": {
                "format": "[%(levelname)s]: %(asctime)s - %(message)s",
                "datefmt": "%x %X",
            },
            "stderr": {
                "format": red + "[%(levelname)s]: %(asctime)s - %(message)s" + endc,
                "datefmt": "%x %X",
            },
        },
        "handlers": {
            "stdout": {
                "class": "logging.StreamHandler",
                "level": "DEBUG",
                "formatter": "stdout",
            },
            "stderr": {
                "class": "logging.StreamHandler",
                "level": "ERROR",
                "formatter": "stderr",
            },
        },
        "loggers": {
            "epiforge.info": {
                "handlers": ["stdout"],
                "level": "INFO",
                "propagate": False,
            },
            "epiforge.error": {
                "handlers": ["stderr"],
                "level": "ERROR",
                "propagate": False,
            },
        },
    }
    dictConfig(cfg)


def set_verbose(verbose: bool) -> None:
    """Turn diagnostic logging on or off."""
    global _verbose
    _verbose = bool(verbose)


def log(msg, level=0):
    """
    Logs a diagnostic message, with optional level paramater

    Info messages are only emitted in verbose mode, errors always are.

    Args:
        - msg (str): message to send to console
        - level (int): log level; 0 for info, 1 for error (default = 0)
    """
    if level == 0 and not _verbose:
        return
    _configure()

    lg = "epiforge.info" if level == 0 else "epiforge.error"
    lvl = logging.INFO if level == 0 else logging.ERROR
    logging.getLogger(lg).log(lvl, msg)


def worker_count(requested: Optional[int] = None) -> int:
    """Return the number of worker processes, capped by EPIFORGE_THREADS."""
    cap = os.getenv(THREADS_ENV)
    count = requested if requested is not None else 1
    if cap:
        try:
            count = min(count, int(cap)) if requested is not None else int(cap)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got '{cap}'")
    return max(1, count)


def parallel_map(
    fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None
) -> List[R]:
    """Map fn over items, in a process pool when more than one worker is allowed.

    Results are returned in input order whatever the pool size.
    """
    items = list(items)
    workers = worker_count(workers)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
