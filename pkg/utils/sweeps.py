# utils/sweeps.py: sweep axes and the worker pool that evaluates independent points
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional

import numpy as np

from utils.errors import ConfigError
from utils.logging_setup import get_logger, fields

logger = get_logger("sweeps")


class SweepError(ConfigError):
    pass


def sweep_values(spec) -> np.ndarray:
    """spec: object or dict with min, max, points, scale ("linear" | "log")."""
    get = spec.get if isinstance(spec, dict) else lambda k, default=None: getattr(spec, k, default)
    lo, hi, n = float(get("min")), float(get("max")), int(get("points"))
    scale = str(get("scale", "linear"))
    if n < 2:
        raise SweepError(f"sweep needs at least 2 points, got {n}")
    if not lo < hi:
        raise SweepError(f"sweep min {lo:g} must be below max {hi:g}")
    if scale == "log":
        if lo <= 0:
            raise SweepError("log sweep needs a positive lower end")
        return np.geomspace(lo, hi, n)
    if scale != "linear":
        raise SweepError(f"unknown sweep scale {scale!r}")
    return np.linspace(lo, hi, n)


def map_points(fn: Callable, items: Iterable, jobs: Optional[int] = 1) -> List:
    """fn over items in input order; a process pool when jobs > 1."""
    items = list(items)
    jobs = max(int(jobs or 1), 1)
    if jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    workers = min(jobs, len(items))
    logger.info("sweep.pool " + fields(workers=workers, points=len(items)))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
