"""End-of-day market data: parsing, validation and summary statistics.

The on-disk format is a plain CSV with the header
``date,open,high,low,close,volume``, ISO dates and ``.`` decimals.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ParseError, ValidationError

HEADER = ("date", "open", "high", "low", "close", "volume")


@dataclass(frozen=True)
class EodBar:
    """One trading day of OHLCV data."""

    date: date
    open: float
    high: float
    low: float
    close: float
    volume: int

    def check(self) -> str | None:
        """Return the name of the first violated invariant, or None."""
        if self.high < self.low:
            return "high < low"
        if not self.low <= self.open <= self.high:
            return "open outside [low, high]"
        if not self.low <= self.close <= self.high:
            return "close outside [low, high]"
        if self.volume < 0:
            return "negative volume"
        return None


@dataclass(frozen=True)
class MarketSeries:
    """Date-ordered bars plus the instrument's free float (shares)."""

    bars: tuple[EodBar, ...]
    free_float: float

    def __len__(self):
        return len(self.bars)

    @property
    def volumes(self) -> np.ndarray:
        return np.array([b.volume for b in self.bars], dtype=float)

    @property
    def closes(self) -> np.ndarray:
        return np.array([b.close for b in self.bars], dtype=float)

    @property
    def lows(self) -> np.ndarray:
        return np.array([b.low for b in self.bars], dtype=float)

    @property
    def highs(self) -> np.ndarray:
        return np.array([b.high for b in self.bars], dtype=float)

    def tail(self, n: int) -> "MarketSeries":
        return MarketSeries(self.bars[max(0, len(self.bars) - n):], self.free_float)


def _parse_float(token: str, field: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"unparseable {field} {token!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {field} {token!r}", line)
    return value


def _parse_volume(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        pass
    value = _parse_float(token, "volume", line)
    if value != int(value):
        raise ParseError(f"non-integer volume {token!r}", line)
    return int(value)


def parse_eod_csv(text: str | io.TextIOBase) -> list[EodBar]:
    """Parse EOD CSV text into bars, in file order.

    Raises ParseError naming the 1-based line number for malformed rows
    and for rows that violate a bar invariant (e.g. ``high < low``).
    """
    if not isinstance(text, str):
        text = text.read()
    # csv handles both LF and CRLF
    reader = csv.reader(io.StringIO(text, newline=""))
    bars: list[EodBar] = []
    header_seen = False
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if not header_seen:
            if tuple(c.lower() for c in cells) != HEADER:
                raise ParseError(f"expected header {','.join(HEADER)!r}", line)
            header_seen = True
            continue
        if len(cells) != len(HEADER):
            raise ParseError(f"expected {len(HEADER)} columns, got {len(cells)}", line)
        try:
            day = date.fromisoformat(cells[0])
        except ValueError:
            raise ParseError(f"unparseable date {cells[0]!r}", line) from None
        bar = EodBar(
            date=day,
            open=_parse_float(cells[1], "open", line),
            high=_parse_float(cells[2], "high", line),
            low=_parse_float(cells[3], "low", line),
            close=_parse_float(cells[4], "close", line),
            volume=_parse_volume(cells[5], line),
        )
        problem = bar.check()
        if problem is not None:
            raise ParseError(problem, line)
        bars.append(bar)
    if not header_seen:
        raise ParseError("empty input, missing header", 1)
    return bars


def read_eod_csv(path: str | Path) -> list[EodBar]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"input file not found: {path}") from None
    try:
        return parse_eod_csv(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def format_eod_csv(bars: Iterable[EodBar]) -> str:
    """Serialize bars back to CSV (LF endings, shortest round-trip floats)."""
    out = [",".join(HEADER)]
    for b in bars:
        out.append(
            f"{b.date.isoformat()},{b.open!r},{b.high!r},{b.low!r},{b.close!r},{b.volume}"
        )
    return "\n".join(out) + "\n"


def validate_series(bars: Sequence[EodBar], free_float: float) -> MarketSeries:
    """Sort bars by date and attach the free float.

    Duplicate dates and a non-positive free float are rejected.
    """
    if not free_float > 0:
        raise ValidationError(f"free_float must be > 0, got {free_float}")
    ordered = sorted(bars, key=lambda b: b.date)
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.date == cur.date:
            raise ValidationError(f"duplicate date {cur.date.isoformat()}")
    for b in ordered:
        problem = b.check()
        if problem is not None:
            raise ValidationError(f"{problem} on {b.date.isoformat()}")
    return MarketSeries(tuple(ordered), float(free_float))


def mean_daily_volume(series: MarketSeries, window: int | None = None) -> float:
    """Arithmetic mean volume over the last ``window`` bars (all bars if None)."""
    n = len(series)
    if window is None:
        window = n
    if not 1 <= window <= n:
        raise ValidationError(f"window must be in [1, {n}], got {window}")
    return float(np.mean(series.volumes[n - window:]))
