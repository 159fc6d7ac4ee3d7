"""One-way repeated-measures ANOVA from a complete subjects x conditions matrix."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import DegenerateDataError, DimensionError, DomainError
from .evidence import SummaryStats
from .special import f_upper_tail

__all__ = ["AnovaTable", "as_data_matrix", "rm_anova", "summary_from_anova", "read_matrix_csv"]

# SSR below this fraction of SST is treated as exactly zero.
_DEGENERATE_RTOL = 1e-13


@dataclass(frozen=True)
class AnovaTable:
    ssa: float
    ssb: float
    ssr: float
    sst: float
    df_treatment: int
    df_residual: int
    f_stat: float
    p_value: float

    def to_dict(self) -> dict:
        return asdict(self)


def as_data_matrix(values) -> np.ndarray:
    """Validate and return ``values`` as a float (n_subjects, k_conditions) array."""
    data = np.asarray(values, dtype=float)
    if data.ndim != 2:
        raise DimensionError(f"data must be a 2-D subjects x conditions matrix, got shape {data.shape}")
    n, k = data.shape
    if n < 2 or k < 2:
        raise DimensionError(f"need at least 2 subjects and 2 conditions, got {n} x {k}")
    if not np.all(np.isfinite(data)):
        raise DomainError("data contain missing or non-finite cells; incomplete designs are not supported")
    return data


def rm_anova(data) -> AnovaTable:
    """Partition the variability of a subjects x conditions matrix.

    Sums of squares use deviations from the means (two passes), and the
    residual term is summed directly from the interaction residuals
    ``y_ij - ybar_i. - ybar_.j + ybar_..`` rather than by subtraction.

    Raises
    ------
    DimensionError
        Fewer than two subjects or conditions.
    DegenerateDataError
        The residual sum of squares is zero, so F is undefined.
    """
    y = as_data_matrix(data)
    n, k = y.shape
    grand = y.mean()
    col_dev = y.mean(axis=0) - grand
    row_dev = y.mean(axis=1) - grand
    centered = y - grand
    ssa = float(n * np.sum(col_dev * col_dev))
    ssb = float(k * np.sum(row_dev * row_dev))
    sst = float(np.sum(centered * centered))
    resid = centered - col_dev[np.newaxis, :] - row_dev[:, np.newaxis]
    ssr = float(np.sum(resid * resid))
    if ssr <= _DEGENERATE_RTOL * sst or ssr == 0.0:
        raise DegenerateDataError("residual sum of squares is zero; F is undefined")
    df_t = k - 1
    df_r = (n - 1) * (k - 1)
    f_stat = (ssa / ssr) * (df_r / df_t)
    return AnovaTable(ssa, ssb, ssr, sst, df_t, df_r, f_stat, f_upper_tail(f_stat, df_t, df_r))


def summary_from_anova(table: AnovaTable, n: int, k: int) -> SummaryStats:
    return SummaryStats(table.f_stat, table.df_treatment, table.df_residual, n, k)


def read_matrix_csv(stream: TextIO | Iterable[str]) -> tuple[list[str], np.ndarray]:
    """Read ``subject,c1,...,ck`` CSV into (condition names, data matrix).

    Raises ``DomainError`` naming the offending row and column for ragged
    rows, blank cells and non-numeric values.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DomainError("input CSV is empty; expected header subject,c1,...,ck") from None
    header = [h.strip() for h in header]
    if len(header) < 3 or header[0].lower() != "subject":
        raise DomainError(
            f"header must be subject,c1,...,ck with at least two conditions, got {','.join(header)!r}"
        )
    conditions = header[1:]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DomainError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
        values = []
        for name, cell in zip(conditions, row[1:]):
            cell = cell.strip()
            if not cell:
                raise DomainError(f"row {lineno}, column {name!r}: missing value")
            try:
                v = float(cell)
            except ValueError:
                raise DomainError(f"row {lineno}, column {name!r}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise DomainError(f"row {lineno}, column {name!r}: non-finite value {cell!r}")
            values.append(v)
        rows.append(values)
    if not rows:
        raise DimensionError("input CSV has no data rows")
    return conditions, np.array(rows, dtype=float)
