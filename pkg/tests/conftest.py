from datetime import date, datetime, timedelta
from pathlib import Path
from types import MappingProxyType

import pytest

from tca.market_data import Dataset, Fill, IntradayBar, OrderRecord, SecurityRecord, load_dataset

ROOT = Path(__file__).resolve().parents[1]
DATA = Path(__file__).resolve().parent / "data"
SMALL = DATA / "small"
SYNTHETIC = ROOT / "fixtures" / "synthetic"
SYNTHETIC_INI = ROOT / "fixtures" / "synthetic.ini"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def small():
    return load_dataset(SMALL)


@pytest.fixture(scope="session")
def synthetic():
    return load_dataset(SYNTHETIC)


def make_order(prices, shares, side="BUY", arrival=None, oid="T1", sid="S1"):
    """Order plus fills one minute apart; ``arrival`` defaults to the first price."""
    p0 = prices[0] if arrival is None else arrival
    start = datetime(2014, 11, 17, 9, 30)
    fills = tuple(Fill(start + timedelta(minutes=1 + i), int(s), float(p)) for i, (p, s) in enumerate(zip(prices, shares)))
    end = start + timedelta(minutes=1 + len(fills))
    order = OrderRecord(oid, sid, side, int(sum(shares)), start, end, float(p0))
    return order, fills


def make_dataset(securities, day_bars, fx=None):
    """Dataset straight from records.

    ``securities`` is a list of ``(sid, exchange, cap, sector, pair)`` and
    ``day_bars`` maps ``(sid, date)`` to a list of ``(o, h, l, c, volume)``.
    """
    secs = {}
    for sid, exch, cap, sector, pair in securities:
        secs[sid] = SecurityRecord(sid, exch, "HKD" if exch == "HK" else "CNY", cap, sector, pair)
    bars = {}
    for (sid, d), rows in sorted(day_bars.items()):
        bars[(sid, d)] = tuple(IntradayBar(sid, d, j, *r[:4], int(r[4]), 1, 1) for j, r in enumerate(rows))
    return Dataset(MappingProxyType(secs), MappingProxyType(bars), MappingProxyType({}),
                   MappingProxyType({}), MappingProxyType(fx or {}))


def flat_day(n, price, volume):
    return [(price, price, price, price, volume)] * n


__all__ = ["date", "make_dataset", "make_order", "flat_day"]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
