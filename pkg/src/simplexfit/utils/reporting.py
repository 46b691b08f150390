# Report writers for command outputs
# JSON floats keep full precision (shortest round-trip repr); CSV floats use 10 significant digits

import json
import math
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pandas as pd

CSV_FLOAT_FORMAT = "%.10g"


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy values, dataclasses and pydantic models to JSON-ready objects.

    Non-finite floats become null.
    """
    if hasattr(value, "model_dump"):
        return to_jsonable(value.model_dump())
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    """Write a report with a generated_at stamp; everything else is deterministic."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"generated_at": timestamp(), **to_jsonable(payload)}
    with open(path, "w") as f:
        json.dump(document, f, indent=2, allow_nan=False)
        f.write("\n")
    return path


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    return path
