"""Reading and filtering of water-quality monitoring tables.

Two on-disk layouts are supported: USGS RDB (tab-delimited with ``#``
comment lines and a column-format line after the header) and RFC-4180 CSV.
Both are wide tables: the first column holds calendar dates, every other
column one monitored variable.  Cells that are empty or read ``NA``/``na``
are missing; any other unparseable numeric cell also becomes missing.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import io
import os
import re
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CacheWriteFailed,
    DuplicateTimestampVariable,
    EmptyResult,
    HttpStatus,
    InvalidDate,
    MalformedHeader,
    NetworkUnavailable,
    RaggedRow,
    UnknownVariable,
)
from .report import MISSING_TOKEN, format_number

_MISSING_TOKENS = {"", "na"}

# Column-format tokens in the line after an RDB header, e.g. "10d" or "12n".
_FORMAT_TOKEN = re.compile(r"\d+[A-Za-z]")


@dataclass(frozen=True)
class Variable:
    code: str
    label: str = ""
    unit: str = ""


@dataclass
class TimeSeriesTable:
    """Wide observation table: one row per calendar date, one column per variable.

    ``values`` is a float array with NaN marking missing cells.  Dates are
    strictly increasing; the parser merges records that share a date as long
    as their variables do not collide.
    """

    dates: list[datetime.date]
    variables: list[Variable]
    values: np.ndarray

    @property
    def n_rows(self) -> int:
        return len(self.dates)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def codes(self) -> list[str]:
        return [v.code for v in self.variables]

    def column(self, code: str) -> np.ndarray:
        try:
            j = self.codes().index(code)
        except ValueError:
            raise UnknownVariable(code) from None
        return self.values[:, j]


@dataclass(frozen=True)
class FilterSpec:
    """Row/column filter applied by :func:`filter_table`.

    ``medium_code`` is carried for provenance (it selects the sample medium
    at retrieval time, e.g. surface water) and does not filter parsed
    tables, which hold a single medium.
    """

    min_count: int = 1
    start: datetime.date = datetime.date.min
    end: datetime.date = datetime.date.max
    required_variable: str | None = None
    medium_code: str | None = None

    def __post_init__(self):
        if self.min_count < 1:
            raise ValueError("min_count must be at least 1")
        if self.start > self.end:
            raise ValueError("filter start date is after end date")


def _parse_date(text: str, line_no: int) -> datetime.date:
    try:
        return datetime.date.fromisoformat(text.strip())
    except ValueError:
        raise InvalidDate(line_no, text) from None


def _parse_cell(text: str) -> float:
    text = text.strip()
    if text.lower() in _MISSING_TOKENS:
        return float("nan")
    try:
        return float(text)
    except ValueError:
        # unparseable numeric cells degrade to missing rather than aborting
        return float("nan")


def _assemble(
    header: Sequence[str],
    rows: Iterable[tuple[int, datetime.date, list[float]]],
) -> TimeSeriesTable:
    """Merge parsed records into a date-sorted table.

    Records sharing a date are merged; two non-missing values for the same
    (date, variable) raise :class:`DuplicateTimestampVariable`.
    """
    codes = [c.strip() for c in header]
    if len(codes) < 2:
        raise MalformedHeader("header must name a date column and at least one variable")
    if any(not c for c in codes):
        raise MalformedHeader("header contains an empty column name")
    var_codes = codes[1:]
    if len(set(var_codes)) != len(var_codes):
        raise MalformedHeader("header repeats a variable code")

    by_date: dict[datetime.date, np.ndarray] = {}
    for _line_no, date, cells in rows:
        row = by_date.get(date)
        if row is None:
            by_date[date] = np.asarray(cells, dtype=float)
            continue
        for j, value in enumerate(cells):
            if np.isnan(value):
                continue
            if not np.isnan(row[j]):
                raise DuplicateTimestampVariable(date, var_codes[j])
            row[j] = value

    dates = sorted(by_date)
    if dates:
        values = np.vstack([by_date[d] for d in dates])
    else:
        values = np.empty((0, len(var_codes)))
    variables = [Variable(code=c) for c in var_codes]
    return TimeSeriesTable(dates=dates, variables=variables, values=values)


def parse_rdb(data: bytes | str) -> TimeSeriesTable:
    """Parse USGS RDB text: ``#`` comments, tab-delimited header, a
    column-format line (``5s	10d	12n`` style) that is validated for arity
    and discarded, then one record per line."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    header: list[str] | None = None
    format_seen = False
    records: list[tuple[int, datetime.date, list[float]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if raw.startswith("#"):
            continue
        if raw.strip() == "" and header is None:
            continue
        fields = raw.split("\t")
        if header is None:
            header = fields
            if len(header) < 2:
                raise MalformedHeader("RDB header must have at least two columns")
            continue
        if not format_seen:
            if len(fields) != len(header):
                raise MalformedHeader(
                    f"format line has {len(fields)} fields, header has {len(header)}"
                )
            # RDB column formats look like "10d", "12n", "5s"; anything else
            # means the format line is missing and this is already data.
            if not all(_FORMAT_TOKEN.fullmatch(f.strip()) for f in fields):
                raise MalformedHeader("line after header is not a column-format line")
            format_seen = True
            continue
        if raw.strip() == "":
            continue
        if len(fields) != len(header):
            raise RaggedRow(line_no, len(header), len(fields))
        date = _parse_date(fields[0], line_no)
        records.append((line_no, date, [_parse_cell(c) for c in fields[1:]]))
    if header is None:
        raise MalformedHeader("no header line found")
    if not format_seen:
        raise MalformedHeader("no column-format line found")
    return _assemble(header, records)


def parse_csv(data: bytes | str) -> TimeSeriesTable:
    """Parse an RFC-4180 CSV with a single header row (date column first)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    header: list[str] | None = None
    records: list[tuple[int, datetime.date, list[float]]] = []
    for fields in reader:
        line_no = reader.line_num
        if header is None:
            if not fields:
                continue
            header = fields
            if len(header) < 2:
                raise MalformedHeader("CSV header must have at least two columns")
            continue
        if not fields:
            continue
        if len(fields) != len(header):
            raise RaggedRow(line_no, len(header), len(fields))
        date = _parse_date(fields[0], line_no)
        records.append((line_no, date, [_parse_cell(c) for c in fields[1:]]))
    if header is None:
        raise MalformedHeader("no header line found")
    return _assemble(header, records)


def emit_csv(table: TimeSeriesTable, date_column: str = "date") -> str:
    """Serialize a table to CSV; inverse of :func:`parse_csv` up to the
    12-significant-digit number formatting."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([date_column] + table.codes())
    for i, date in enumerate(table.dates):
        cells = [
            MISSING_TOKEN if np.isnan(v) else format_number(v)
            for v in table.values[i]
        ]
        writer.writerow([date.isoformat()] + cells)
    return out.getvalue()


def filter_table(table: TimeSeriesTable, spec: FilterSpec) -> TimeSeriesTable:
    """Apply a :class:`FilterSpec`: restrict rows to the date range, drop
    rows where the required variable is missing, then drop variables with
    fewer than ``min_count`` non-missing values among the surviving rows.

    Counting on the surviving rows makes the operation idempotent.  The
    required variable itself is exempt from the count rule (every surviving
    row has it by construction).
    """
    if spec.required_variable is not None and spec.required_variable not in table.codes():
        raise UnknownVariable(spec.required_variable)

    row_mask = np.array(
        [spec.start <= d <= spec.end for d in table.dates], dtype=bool
    )
    if spec.required_variable is not None:
        required_col = table.column(spec.required_variable)
        row_mask &= ~np.isnan(required_col)

    kept_values = table.values[row_mask]
    counts = np.sum(~np.isnan(kept_values), axis=0)
    col_mask = counts >= spec.min_count
    if spec.required_variable is not None:
        col_mask[table.codes().index(spec.required_variable)] = True

    return TimeSeriesTable(
        dates=[d for d, keep in zip(table.dates, row_mask) if keep],
        variables=[v for v, keep in zip(table.variables, col_mask) if keep],
        values=kept_values[:, col_mask],
    )


def drop_incomplete_rows(table: TimeSeriesTable) -> TimeSeriesTable:
    """Keep only rows with no missing cell; error if nothing survives."""
    mask = ~np.isnan(table.values).any(axis=1)
    if not mask.any():
        raise EmptyResult("no complete rows remain")
    return TimeSeriesTable(
        dates=[d for d, keep in zip(table.dates, mask) if keep],
        variables=list(table.variables),
        values=table.values[mask],
    )


def _cache_key(site: str, codes: Sequence[str], start: str, end: str) -> str:
    key = "|".join([site, ",".join(codes), start, end])
    return hashlib.sha256(key.encode("utf-8")).hexdigest()


def fetch_remote(
    site: str,
    codes: Sequence[str],
    start: str,
    end: str,
    cache_dir: str | Path,
    url_template: str,
    medium_code: str | None = None,
    offline: bool = False,
    timeout: float = 30.0,
) -> bytes:
    """Fetch a monitoring record over HTTP with a content cache.

    The cache key is a hash of (site, codes, start, end); a hit never
    touches the network.  Downloads are written to a temporary file and
    renamed into place so a crash cannot leave a truncated cache entry.
    """
    cache_dir = Path(cache_dir)
    cached = cache_dir / (_cache_key(site, codes, start, end) + ".rdb")
    if cached.exists():
        return cached.read_bytes()
    if offline:
        raise NetworkUnavailable(f"offline and no cached copy for site {site}")

    url = url_template.format(
        site=site,
        codes=",".join(codes),
        start=start,
        end=end,
        medium=medium_code or "",
    )
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            status = getattr(resp, "status", 200)
            if status != 200:
                raise HttpStatus(status)
            body = resp.read()
    except urllib.error.HTTPError as exc:
        raise HttpStatus(exc.code) from exc
    except urllib.error.URLError as exc:
        raise NetworkUnavailable(str(exc.reason)) from exc
    except OSError as exc:
        raise NetworkUnavailable(str(exc)) from exc

    try:
        cache_dir.mkdir(parents=True, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=cache_dir, suffix=".part")
        with os.fdopen(fd, "wb") as handle:
            handle.write(body)
        os.replace(tmp_path, cached)
    except OSError as exc:
        raise CacheWriteFailed(str(exc)) from exc
    return body
