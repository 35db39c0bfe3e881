"""
Writers for the tabular (CSV) and report (JSON) outputs.

CSV goes through pandas with 17 significant digits; JSON uses sorted keys and writes non-finite floats as null.
"""
import json
import math
import sys
from typing import IO, Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..environment import EnvironmentPath
from ..extrema import ExtremaRecord, SlopeRecord

CSV_FLOAT_FORMAT = "%.17g"
JSON_INDENT = 2


def _open(output: Optional[str]) -> IO:
    if output is None or output == "-":
        return sys.stdout
    return open(output, "w", encoding="utf8", newline="")


def write_csv(frame: pd.DataFrame, output: Optional[str] = None) -> None:
    stream = _open(output)
    try:
        frame.to_csv(stream, index=False, float_format=CSV_FLOAT_FORMAT)
    finally:
        if stream is not sys.stdout:
            stream.close()


def rows_to_frame(rows: Iterable[Sequence], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(columns))


def _json_safe(value):
    if isinstance(value, Mapping):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_json_safe(item) for item in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def to_json(document: Mapping) -> str:
    return json.dumps(_json_safe(document), sort_keys=True, indent=JSON_INDENT, allow_nan=False) + "\n"


def write_json(document: Mapping, output: Optional[str] = None) -> None:
    stream = _open(output)
    try:
        stream.write(to_json(document))
    finally:
        if stream is not sys.stdout:
            stream.close()


def path_frame(path: EnvironmentPath) -> pd.DataFrame:
    """Columns index, position, value; index 0 is the origin."""
    index = np.arange(-path.origin_index, len(path) - path.origin_index)
    return pd.DataFrame({"index": index, "position": path.positions(), "value": path.values()})


def extrema_frame(records: Sequence[ExtremaRecord]) -> pd.DataFrame:
    return rows_to_frame(((r.position, r.value, r.kind.value) for r in records), ("position", "value", "kind"))


def slopes_frame(slopes: Sequence[SlopeRecord]) -> pd.DataFrame:
    return rows_to_frame(
        ((s.kind.value, s.length, s.height, s.start_position, s.is_central, s.is_boundary_partial) for s in slopes),
        ("kind", "length", "height", "start_position", "is_central", "is_boundary_partial"),
    )
