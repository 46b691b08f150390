"""
Tabular datasets: a response column in (0, 1) plus numeric covariates.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from simplexfit.errors import DataError

logger = logging.getLogger(__name__)

_MISSING_TOKENS = {"", "NA", "N/A", "NaN", "nan", "null", "NULL", "None"}


@dataclass(frozen=True, eq=False)
class Dataset:
    """Validated numeric columns; rows are observations."""
    frame: pd.DataFrame
    response: str

    def __post_init__(self):
        validate_frame(self.frame, self.response)

    @classmethod
    def from_arrays(cls, columns: Mapping[str, Sequence[float]], response: str) -> "Dataset":
        frame = pd.DataFrame({name: np.asarray(values, dtype=float) for name, values in columns.items()})
        return cls(frame=frame, response=response)

    @property
    def n(self) -> int:
        return len(self.frame)

    @cached_property
    def y(self) -> np.ndarray:
        return self.frame[self.response].to_numpy(dtype=float)

    @cached_property
    def columns(self) -> Dict[str, np.ndarray]:
        return {name: self.frame[name].to_numpy(dtype=float) for name in self.frame.columns}

    @property
    def names(self) -> Sequence[str]:
        return list(self.frame.columns)

    def drop(self, cases: Iterable[int]) -> "Dataset":
        """Dataset without the given 0-based rows."""
        cases = sorted(set(int(c) for c in cases))
        bad = [c for c in cases if c < 0 or c >= self.n]
        if bad:
            raise DataError(f"Case numbers out of range 1..{self.n}: {[c + 1 for c in bad]}")
        keep = np.setdiff1d(np.arange(self.n), cases)
        return Dataset(frame=self.frame.iloc[keep].reset_index(drop=True), response=self.response)

    def with_response(self, y: np.ndarray) -> "Dataset":
        frame = self.frame.copy()
        frame[self.response] = np.asarray(y, dtype=float)
        return Dataset(frame=frame, response=self.response)


def validate_frame(frame: pd.DataFrame, response: str) -> None:
    """
    Raises:
        DataError: missing response column, too few rows, missing values,
            or responses outside (0, 1)
    """
    if response not in frame.columns:
        raise DataError(f"Response column '{response}' not found (columns: {', '.join(map(str, frame.columns))})")
    if len(frame) == 0:
        raise DataError("no data rows")
    if len(frame) < 2:
        raise DataError("At least 2 observations are required")

    values = frame.to_numpy(dtype=float)
    missing = ~np.isfinite(values)
    if missing.any():
        row, col = np.argwhere(missing)[0]
        raise DataError(f"Missing or non-finite value in row {row + 1}, column '{frame.columns[col]}'")

    y = frame[response].to_numpy(dtype=float)
    outside = np.flatnonzero((y <= 0.0) | (y >= 1.0))
    if outside.size:
        rows = ", ".join(str(r + 1) for r in outside[:10])
        more = f" and {outside.size - 10} more" if outside.size > 10 else ""
        raise DataError(f"Response must lie strictly inside (0, 1); violated in rows {rows}{more}")


def load_dataset(path: str, response: str) -> Dataset:
    """
    Read a comma-separated file with a header row.

    Row numbers in errors count data rows from 1 (the header is line 1 of the file).

    Raises:
        DataError: unreadable file, non-numeric or missing cells, or invalid responses
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise DataError(f"Data file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} is empty (no header row)") from None
    except pd.errors.ParserError as e:
        raise DataError(f"Could not parse {path}: {e}") from e

    raw.columns = [str(c).strip() for c in raw.columns]
    if raw.empty:
        raise DataError(f"{path}: no data rows")

    frame = pd.DataFrame(index=raw.index)
    for name in raw.columns:
        cells = raw[name].str.strip()
        missing = cells.isin(_MISSING_TOKENS)
        if missing.any():
            row = int(np.flatnonzero(missing.to_numpy())[0])
            raise DataError(f"{path}: missing value in row {row + 1} (line {row + 2}), column '{name}'")
        numeric = pd.to_numeric(cells, errors="coerce")
        bad = numeric.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataError(
                f"{path}: cannot parse '{cells.iloc[row]}' as a number in row {row + 1} "
                f"(line {row + 2}), column '{name}'"
            )
        frame[name] = numeric.astype(float)

    dataset = Dataset(frame=frame, response=response)
    logger.info(f"Loaded {dataset.n} observations x {len(dataset.names)} columns from {path}")
    return dataset


def write_dataset(dataset: Dataset, path: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset.frame.to_csv(path, index=False, float_format="%.10g")
    return path
