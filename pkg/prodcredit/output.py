"""Versioned CSV tables and JSON summaries for command results."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SCHEMA_HEADER = "# prodcredit-schema v1"
FLOAT_FORMAT = "%.17g"


def write_table(
    path: Path,
    frame: pd.DataFrame,
    footer: Optional[Mapping[str, Any]] = None,
) -> Path:
    """Write ``frame`` below the schema header; ``footer`` becomes a trailing ``# summary`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = frame.to_csv(index=False, lineterminator="\n", float_format=FLOAT_FORMAT)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(SCHEMA_HEADER + "\n")
        f.write(body)
        if footer:
            fields = ",".join(f"{k}={_format(v)}" for k, v in footer.items())
            f.write(f"# summary {fields}\n")
    logger.debug("Wrote %d rows to %s", len(frame), path)
    return path


def write_json(path: Path, payload: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(_plain(payload), f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def read_table(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def read_summary(path: Path) -> dict:
    """Parse the trailing ``# summary k=v,...`` line of a table."""
    for line in reversed(Path(path).read_text(encoding="utf-8").splitlines()):
        if line.startswith("# summary "):
            out = {}
            for item in line[len("# summary "):].split(","):
                key, _, value = item.partition("=")
                out[key] = value
            return out
    return {}


def rows_frame(rows: Iterable[Mapping[str, Any]], columns) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(columns))


def _format(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value
