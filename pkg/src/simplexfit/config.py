"""
Configuration module for simplexfit.

Loads environment variables and run documents, and provides centralized access
to configuration values.
"""

import json
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from simplexfit.errors import ConfigError, DataError
from simplexfit.schemas import RunConfig

# Load environment variables from .env file
load_dotenv()

# Output and reproducibility defaults
DEFAULT_OUT_DIR = os.getenv("SIMPLEXFIT_OUT_DIR", "./results")
DEFAULT_SEED = int(os.getenv("SIMPLEXFIT_SEED", "20240101"))
WORKERS = max(1, int(os.getenv("SIMPLEXFIT_WORKERS", "1")))
LOG_LEVEL = os.getenv("SIMPLEXFIT_LOG_LEVEL", "INFO").upper()

# Reading-accuracy data (not bundled; see README for the schema)
READING_DATA_PATH = os.getenv("SIMPLEXFIT_READING_DATA")


def get_absolute_path(relative_path: str) -> Path:
    """
    Convert relative path to absolute path.

    Args:
        relative_path: Relative path string

    Returns:
        Absolute Path object
    """
    if os.path.isabs(relative_path):
        return Path(relative_path)

    # Relative paths resolve against the working directory, not the install location
    return (Path(os.getcwd()) / relative_path).resolve()


def load_run_config(
    path: str,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
) -> RunConfig:
    """
    Load and validate a JSON run document, applying CLI overrides.

    Args:
        path: Path to the run document
        seed: Overrides the document's seed when given
        out_dir: Overrides the document's output directory when given

    Returns:
        Fully resolved RunConfig

    Raises:
        ConfigError: If the file is missing, is not JSON, or fails validation
    """
    config_path = get_absolute_path(path)
    if not config_path.exists():
        raise ConfigError(f"Run document not found: {config_path}")

    try:
        with open(config_path, "r") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Run document {config_path} is not valid JSON: {e}") from e

    if seed is not None:
        raw["seed"] = seed
    if out_dir is not None:
        raw["out_dir"] = out_dir
    raw.setdefault("seed", DEFAULT_SEED)
    raw.setdefault("out_dir", DEFAULT_OUT_DIR)

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid run document {config_path}:\n{e}") from e

    # Data paths in a run document are relative to the document itself
    if config.data is not None and not os.path.isabs(config.data.path):
        config.data.path = str((config_path.parent / config.data.path).resolve())
    return config


def validate_paths(config: RunConfig) -> None:
    """
    Validate that the data path named by a run document exists.

    Raises:
        ConfigError: If the data section is missing
        DataError: If the data file doesn't exist
    """
    if config.data is None:
        raise ConfigError("Run document has no 'data' section")
    data_path = get_absolute_path(config.data.path)
    if not data_path.exists():
        raise DataError(
            f"Data file not found: {data_path}\n\n"
            "Please check the run document's data.path entry."
        )
