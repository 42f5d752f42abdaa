"""CSV ingestion and output of return panels."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    """Malformed input file; the message names the offending line."""


@dataclass
class ReturnsPanel:
    """A T x N panel with column names and optional ISO dates (one per row)."""

    values: np.ndarray
    columns: list[str]
    dates: list[str] | None = None

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]


def _is_date(cell: str) -> bool:
    try:
        dt.date.fromisoformat(cell.strip()[:10])
    except ValueError:
        return False
    return True


def ingest_csv(path, log_diff: bool = False) -> ReturnsPanel:
    """Read a numeric panel with a header row.

    A first column whose header is ``date`` (any case) or whose first
    entry is an ISO-8601 date is kept as the date index. With ``log_diff``
    the columns are prices and ``log P_t - log P_{t-1}`` is returned; the
    dates then refer to the later day of each pair.

    Raises
    ------
    ParseError
        On ragged rows, empty or non-numeric cells, non-positive prices
        under ``log_diff``, or fewer than two data rows.
    """
    with open(path, newline="") as fh:
        rows = [(n, row) for n, row in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in row)]
    if not rows:
        raise ParseError(f"{path}: empty file")
    _, header = rows[0]
    body = rows[1:]
    if len(body) < 2:
        raise ParseError(f"{path}: need at least 2 data rows, got {len(body)}")
    width = len(header)
    has_dates = header[0].strip().lower() == "date" or _is_date(body[0][1][0])
    first = 1 if has_dates else 0
    if width - first < 1:
        raise ParseError(f"{path}: no numeric columns")

    values = np.empty((len(body), width - first))
    dates = [] if has_dates else None
    for r, (line, row) in enumerate(body):
        if len(row) != width:
            raise ParseError(f"{path}, line {line}: expected {width} fields, got {len(row)}")
        if has_dates:
            if not _is_date(row[0]):
                raise ParseError(f"{path}, line {line}, column 1: {row[0]!r} is not an ISO date")
            dates.append(row[0].strip())
        for c in range(first, width):
            cell = row[c].strip()
            try:
                values[r, c - first] = float(cell)
            except ValueError:
                what = "missing value" if not cell else f"non-numeric value {cell!r}"
                raise ParseError(f"{path}, line {line}, column {c + 1} ({header[c].strip()}): {what}") from None
            if not np.isfinite(values[r, c - first]):
                raise ParseError(f"{path}, line {line}, column {c + 1}: non-finite value {cell!r}")

    if log_diff:
        bad = np.argwhere(values <= 0)
        if bad.size:
            r, c = bad[0]
            raise ParseError(f"{path}, line {body[r][0]}, column {c + first + 1}: "
                             "prices must be positive for log-differencing")
        values = np.diff(np.log(values), axis=0)
        if dates is not None:
            dates = dates[1:]
    columns = [h.strip() for h in header[first:]]
    return ReturnsPanel(values, columns, dates)


def write_panel_csv(path, values, columns=None, dates=None) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    columns = columns or [f"x{i + 1}" for i in range(values.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow((["date"] if dates is not None else []) + list(columns))
        for t, row in enumerate(values):
            lead = [dates[t]] if dates is not None else []
            writer.writerow(lead + [repr(float(v)) for v in row])
