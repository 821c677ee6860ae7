import io
import json
from typing import Dict, List

import numpy as np
import pandas as pd


def format_float(value: float) -> str:
    """Shortest decimal that round-trips to the same double; non-finite values by name."""
    value = float(value)
    if np.isnan(value):
        return 'nan'
    if np.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return repr(value)


def canonical(value):
    """Plain JSON-ready version of a report value."""
    if isinstance(value, dict):
        return {str(k): canonical(v) for k, v in value.items()}
    if isinstance(value, pd.DataFrame):
        return [canonical(row) for row in value.to_dict(orient='records')]
    if isinstance(value, (list, tuple, np.ndarray)):
        return [canonical(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else format_float(value)
    if value is None or isinstance(value, str):
        return value
    return str(value)


def to_json(report: Dict) -> str:
    return json.dumps(canonical(report), sort_keys=True, allow_nan=False) + '\n'


def _cell(value) -> str:
    value = canonical(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, list):
        return ';'.join(_cell(v) for v in value)
    if isinstance(value, bool):
        return str(value).lower()
    return '' if value is None else str(value)


def to_csv(report: Dict, table_key: str = None) -> str:
    """CSV view of a report.

    With `table_key` the table stored under that key is written one row per
    record; otherwise the report becomes ``key,value`` rows in key order.
    """
    buffer = io.StringIO()
    if table_key is not None:
        table: pd.DataFrame = report[table_key]
        rows: List[Dict] = table.to_dict(orient='records')
        frame = pd.DataFrame([{k: _cell(v) for k, v in row.items()} for row in rows], columns=table.columns)
    else:
        frame = pd.DataFrame([(k, _cell(report[k])) for k in sorted(report)], columns=['key', 'value'])
    frame.to_csv(buffer, index=False, lineterminator='\n')
    return buffer.getvalue()
