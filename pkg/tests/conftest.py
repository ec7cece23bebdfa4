from datetime import date, timedelta

import pytest

from quantwell.market_data import EodBar, validate_series


def bar(day, o, h, l, c, v):
    if isinstance(day, int):
        day = date(2020, 1, 1) + timedelta(days=day)
    return EodBar(day, float(o), float(h), float(l), float(c), int(v))


def flat_bar(day, price, volume):
    return bar(day, price, price, price, price, volume)


def series_from(bars, free_float=1e6):
    return validate_series(bars, free_float)


@pytest.fixture
def three_bars():
    return [
        bar(0, 10.0, 10.5, 9.8, 10.2, 100),
        bar(1, 10.2, 10.8, 10.0, 10.6, 200),
        bar(2, 10.6, 10.7, 10.1, 10.3, 300),
    ]


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
        _CRITERIA[(number, title)] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[key])
