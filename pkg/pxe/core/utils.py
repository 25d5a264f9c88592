"""Utility functions for pxe"""

import csv
import hashlib
import io
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

from .logger import logger


def atomic_write(file_path: Union[str, Path], content: Union[str, bytes], mode: str = "w") -> bool:
    """
    Write to file atomically (write to temp, then move)

    Args:
        file_path: Target file path
        content: Content to write (str for text modes, bytes for "wb")
        mode: Write mode

    Returns:
        True if successful
    """
    file_path = Path(file_path)
    temp_path = file_path.with_suffix(file_path.suffix + ".tmp")

    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(temp_path, mode) as f:
            f.write(content)
            f.flush()
            os.fsync(f.fileno())

        temp_path.replace(file_path)

        logger.debug(f"Successfully wrote to {file_path}")
        return True

    except Exception as e:
        logger.error(f"Failed to write to {file_path}: {e}")
        if temp_path.exists():
            temp_path.unlink()
        return False


def to_json(data: Any) -> str:
    """Serialize report data deterministically (sorted keys, fixed float repr)"""
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(value: Any) -> Any:
    # numpy scalars and arrays, Fractions, Paths
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return str(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(file_path: Union[str, Path], data: Any) -> bool:
    """Write a JSON report atomically"""
    return atomic_write(file_path, to_json(data))


def write_csv(file_path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> bool:
    """
    Write a CSV table atomically

    Args:
        file_path: Target file path
        header: Column names
        rows: Row values, one sequence per row

    Returns:
        True if successful
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return atomic_write(file_path, buffer.getvalue())


def _csv_cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value


def ensure_directory(path: Union[str, Path], mode: int = 0o755) -> bool:
    """Ensure directory exists with proper permissions"""
    path = Path(path)

    try:
        path.mkdir(parents=True, exist_ok=True, mode=mode)
        return True
    except Exception as e:
        logger.error(f"Failed to create directory {path}: {e}")
        return False


def sha256_text(text: str) -> str:
    """Hex SHA-256 digest of a text"""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def is_power_of_two(value: int) -> bool:
    """Check whether value is a positive power of two"""
    return value > 0 and (value & (value - 1)) == 0


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge override into a copy of base"""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged
