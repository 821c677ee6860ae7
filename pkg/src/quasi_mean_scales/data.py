from pathlib import Path
from typing import Tuple, Union

from loguru import logger
import numpy as np
import pandas as pd

from quasi_mean_scales.core import Sample, Weights
from quasi_mean_scales.errors import DataFileError

VALUE_COLUMN = 'value'
WEIGHT_COLUMN = 'weight'


def _numeric_column(data: pd.DataFrame, column: str) -> np.ndarray:
    """Parse a column of cells as finite floats, naming the first bad data row.

    Cells go through ``float`` one by one so every value is the correctly
    rounded double of its text.
    """
    values = []
    for row, cell in enumerate(data[column], start=1):
        try:
            value = float(cell)
        except (TypeError, ValueError):
            value = np.nan
        if not np.isfinite(value):
            raise DataFileError(f'{column} cell {cell!r} is not a finite number', row=row)
        values.append(value)
    return np.array(values, dtype=float)


def ingest_sample(path: Union[str, Path]) -> Tuple[Sample, Weights]:
    """Loads a sample from a CSV file with a ``value`` column and an optional ``weight`` column.

    Without weights every value gets 1/n; weights are otherwise normalized
    the way Weights does it.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFileError(f'Data file {path} does not exist.')
    try:
        data = pd.read_csv(path, dtype=str, encoding='utf-8', skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataFileError(f'Data file {path} is empty.')
    data.columns = [str(c).strip() for c in data.columns]
    if VALUE_COLUMN not in data.columns:
        raise DataFileError(f'Data file {path} needs a {VALUE_COLUMN!r} column, found {list(data.columns)}.')
    if data.empty:
        raise DataFileError(f'Data file {path} has a header but no data rows.')

    values = _numeric_column(data, VALUE_COLUMN)
    if WEIGHT_COLUMN in data.columns:
        weights = _numeric_column(data, WEIGHT_COLUMN)
        if (weights <= 0).any():
            row = int(np.flatnonzero(weights <= 0)[0])
            raise DataFileError(f'weight {weights[row]} is not positive', row=row + 1)
        weights = Weights(tuple(weights))
    else:
        weights = Weights.uniform(len(values))
    logger.debug(f'Read {len(values)} values from {path}.')

    return Sample(tuple(values)), weights
