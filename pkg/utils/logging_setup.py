# utils/logging_setup.py: logging bootstrap + correlation id shared by all runs
import logging, sys
from contextlib import contextmanager

_corr = {"id": "-"}
_FORMAT = "%(levelname)s | %(name)s | %(corr)s | %(message)s"

class _CorrelationFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        record.corr = _corr.get("id", "-")
        return True

def init_logging(app_name: str = "rydex", level: str = "INFO"):
    root = logging.getLogger()
    if not any(getattr(h, "_rydex", False) for h in root.handlers):
        handler = logging.StreamHandler(stream=sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler.addFilter(_CorrelationFilter())
        handler._rydex = True
        root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    logging.getLogger(app_name).info("logging initialized")

def set_correlation_id(cid: str):
    _corr["id"] = cid

def get_correlation_id() -> str:
    return _corr.get("id", "-")

def get_logger(name: str):
    return logging.getLogger(f"rydex.{name}")

def fields(**kw) -> str:
    """Render event details as `k=v` pairs; floats get 6 significant digits."""
    parts = []
    for k, v in kw.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        parts.append(f"{k}={v}")
    return " ".join(parts)

def log_exception(logger, e: Exception):
    logger.error(f"exception: {type(e).__name__}: {e}")

@contextmanager
def context(logger, label: str, **kw):
    detail = fields(**kw)
    logger.info(f"{label}.start {detail}".rstrip())
    try:
        yield
        logger.info(f"{label}.done")
    except Exception as e:
        logger.error(f"{label}.error: {type(e).__name__}: {e}")
        raise
