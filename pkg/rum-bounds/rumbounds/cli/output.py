"""Rendering of command results as JSON, aligned text tables and TSV files."""

import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12


@dataclass
class CommandResult:
    """Payload of one command, its exit code and an optional plottable table."""

    payload: dict[str, Any]
    exit_code: int = 0
    table: pd.DataFrame | None = field(default=None)


def round_significant(value: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    if not math.isfinite(value):
        return value
    # +0.0 turns -0.0 into 0.0
    return float(f"{value:.{digits}g}") + 0.0


def rounded(data: Any) -> Any:
    """Round every float in a nested structure to 12 significant digits."""
    if isinstance(data, bool) or data is None:
        return data
    if isinstance(data, float):
        return round_significant(data)
    if isinstance(data, dict):
        return {key: rounded(value) for key, value in data.items()}
    if isinstance(data, list | tuple):
        return [rounded(value) for value in data]
    return data


def render_json(payload: dict[str, Any]) -> str:
    return json.dumps(rounded(payload), indent=2, ensure_ascii=False)


def _format_float(value: float) -> str:
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def render_text(result: CommandResult) -> str:
    """Scalar fields as ``key: value`` lines followed by the table, if any."""
    lines = []
    for key, value in rounded(result.payload).items():
        if isinstance(value, list | dict) and result.table is not None:
            continue
        if isinstance(value, list) and value and isinstance(value[0], dict):
            frame = pd.DataFrame(value)
            lines.append(f"{key}:")
            lines.append(frame.to_string(index=False, float_format=_format_float))
            continue
        lines.append(f"{key}: {value}")
    if result.table is not None:
        lines.append(result.table.to_string(index=False, float_format=_format_float))
    return "\n".join(lines)


def write_tsv(table: pd.DataFrame, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, sep="\t", index=False, float_format=f"%.{SIGNIFICANT_DIGITS}g")
    logger.info(f"💾 Table written to {path}")


def emit(text: str, out: str | Path | None = None) -> None:
    """Write ``text`` to ``out`` or, without a path, to standard output."""
    if out is None:
        sys.stdout.write(text + "\n")
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"💾 Result written to {path}")
