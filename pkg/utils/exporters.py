# utils/exporters.py: CSV / JSON artifacts and the reproducibility envelope
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from utils.logging_setup import get_logger, get_correlation_id

logger = get_logger("exporters")

FLOAT_FORMAT = "%.11e"   # 12 significant digits
VERSION = "1.1.0"


def to_csv(filename, frame: pd.DataFrame) -> str:
    path = Path(filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    logger.info(f"artifact.csv path={path} rows={len(frame)}")
    return str(path)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):     # Enum
        return obj.value
    return obj


def to_json(filename, payload: dict) -> str:
    path = Path(filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_plain(payload), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"artifact.json path={path}")
    return str(path)


def envelope(config: dict, derived: dict = None, **extra) -> dict:
    """Resolved config + derived quantities + whatever the command adds."""
    out = {
        "rydex_version": VERSION,
        "run_id": get_correlation_id(),
        "config": config,
        "derived": derived or {},
    }
    out.update(extra)
    return out
