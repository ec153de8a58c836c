"""Dataset ingestion, validation and volume-profile construction.

Five CSV files make up a dataset (see README for the column layout):
``securities.csv``, ``bars.csv``, ``orders.csv``, ``fills.csv`` and
``fx.csv``. Only securities and bars are mandatory. Bars live on a
half-hour grid per exchange session; finer bars are folded up on ingest.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import DataError, DuplicateKey, MalformedRow, NoData, UnknownReference

SCHEMA_VERSION = "1"

EXCHANGE_CURRENCY = {"HK": "HKD", "SH": "CNY"}

# Local trading sessions (2014 hours). Each half-hour of each block is one slot.
SESSIONS = {
    "HK": ((time(9, 30), time(12, 0)), (time(13, 0), time(16, 0))),
    "SH": ((time(9, 30), time(11, 30)), (time(13, 0), time(15, 0))),
}

FILE_NAMES = ("securities", "bars", "orders", "fills", "fx")

_HEADERS = {
    "securities": ["security_id", "exchange", "currency", "market_cap_usd", "sector", "dual_pair_id"],
    "bars": ["security_id", "date", "interval_index", "open", "high", "low", "close",
             "volume", "upticks", "downticks"],
    "orders": ["order_id", "security_id", "side", "total_shares", "arrival_ts", "end_ts",
               "arrival_price"],
    "fills": ["order_id", "ts", "shares", "price"],
    "fx": ["date", "hkd_per_cny"],
}


def _minutes(t: time) -> int:
    return t.hour * 60 + t.minute


def session_length(exchange: str) -> int:
    """Number of half-hour slots in the exchange's trading day."""
    return sum((_minutes(b) - _minutes(a)) // 30 for a, b in SESSIONS[exchange])


def interval_of(exchange: str, ts: datetime) -> int:
    """Half-hour slot containing ``ts``; times outside the session are clamped
    to the nearest slot (lunch-break timestamps map to the first afternoon slot)."""
    m = ts.hour * 60 + ts.minute + ts.second / 60.0
    offset = 0
    last = 0
    for start, end in SESSIONS[exchange]:
        a, b = _minutes(start), _minutes(end)
        n = (b - a) // 30
        if m < a:
            return offset
        if m < b:
            return offset + int((m - a) // 30)
        offset += n
        last = offset - 1
    return last


def interval_start(exchange: str, day: date, index: int) -> datetime:
    offset = 0
    for start, end in SESSIONS[exchange]:
        n = (_minutes(end) - _minutes(start)) // 30
        if index < offset + n:
            return datetime.combine(day, start) + timedelta(minutes=30 * (index - offset))
        offset += n
    raise ValueError(f"interval {index} outside the {exchange} session")


@dataclass(frozen=True)
class SecurityRecord:
    security_id: str
    exchange: str
    currency: str
    market_cap_usd: float
    sector: str
    dual_pair_id: Optional[str] = None


@dataclass(frozen=True)
class IntradayBar:
    security_id: str
    trading_date: date
    interval_index: int
    open: float
    high: float
    low: float
    close: float
    volume: int
    upticks: int = 0
    downticks: int = 0
    ticks_derived: bool = False

    @property
    def mid(self) -> float:
        return (self.high + self.low) / 2.0


@dataclass(frozen=True)
class OrderRecord:
    order_id: str
    security_id: str
    side: str
    total_shares: int
    arrival_ts: datetime
    end_ts: datetime
    arrival_price: float

    @property
    def side_sign(self) -> int:
        return 1 if self.side == "BUY" else -1

    @property
    def trading_date(self) -> date:
        return self.arrival_ts.date()


@dataclass(frozen=True)
class Fill:
    ts: datetime
    shares: int
    price: float


@dataclass(frozen=True)
class VolumeCurve:
    security_id: str
    trading_date: date
    fractions: tuple
    zero_volume: bool = False
    days_used: int = 1
    shares: tuple = ()


@dataclass(frozen=True)
class Dataset:
    """Immutable, validated in-memory dataset.

    ``bars`` is keyed by ``(security_id, date)`` with bars sorted by slot,
    ``fills`` by order id with fills in time order.
    """

    securities: Mapping[str, SecurityRecord]
    bars: Mapping[tuple, tuple]
    orders: Mapping[str, OrderRecord]
    fills: Mapping[str, tuple]
    fx: Mapping[date, float]
    row_counts: Mapping[str, int] = field(default_factory=dict, compare=False)

    def trading_dates(self, security_id: str) -> list[date]:
        return sorted(d for (s, d) in self.bars if s == security_id)

    def all_dates(self) -> list[date]:
        return sorted({d for (_, d) in self.bars})

    def day_bars(self, security_id: str, day: date) -> tuple:
        try:
            return self.bars[(security_id, day)]
        except KeyError:
            raise NoData("bars", security_id, day) from None

    def day_volume(self, security_id: str, day: date) -> int:
        return sum(b.volume for b in self.day_bars(security_id, day))

    def daily_close(self, security_id: str, day: date) -> float:
        return self.day_bars(security_id, day)[-1].close

    def pairs(self) -> dict[str, tuple[str, str]]:
        """``pair_id -> (hk_security_id, sh_security_id)``, sorted by pair id."""
        legs: dict[str, dict[str, str]] = {}
        for sec in self.securities.values():
            if sec.dual_pair_id:
                legs.setdefault(sec.dual_pair_id, {})[sec.exchange] = sec.security_id
        return {pid: (v["HK"], v["SH"]) for pid, v in sorted(legs.items())}

    def prior_dates(self, security_id: str, as_of: date, window_days: int) -> list[date]:
        prior = [d for d in self.trading_dates(security_id) if d < as_of]
        return prior[-window_days:] if window_days > 0 else []


# --------------------------------------------------------------------------- ingest


def _open_rows(path: Path, kind: str):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "missing header row", str(path)) from None
        header = [h.strip() for h in header]
        expected = _HEADERS[kind]
        if header != expected:
            raise MalformedRow(1, f"header {header} != {expected}", str(path))
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise MalformedRow(reader.line_num, f"expected {len(expected)} fields, got {len(row)}",
                                   str(path))
            yield reader.line_num, dict(zip(expected, (c.strip() for c in row)))


def _parse(line: int, path: Path, fn, value: str, name: str):
    try:
        return fn(value)
    except (ValueError, TypeError) as exc:
        raise MalformedRow(line, f"bad {name} {value!r}: {exc}", str(path)) from None


def _int(v: str) -> int:
    f = float(v)
    if not f.is_integer():
        raise ValueError("not an integer")
    return int(f)


def _positive(v: str) -> float:
    f = float(v)
    if not math.isfinite(f) or f <= 0:
        raise ValueError("must be positive")
    return f


def _nonneg_int(v: str) -> int:
    i = _int(v)
    if i < 0:
        raise ValueError("must be non-negative")
    return i


def resolve_paths(source) -> dict[str, Path]:
    """Accept a directory or a ``{name: path}`` mapping; returns the files present."""
    if isinstance(source, (str, os.PathLike)):
        root = Path(source)
        paths = {name: root / f"{name}.csv" for name in FILE_NAMES}
    else:
        paths = {k: Path(v) for k, v in dict(source).items()}
    for name in ("securities", "bars"):
        if name not in paths or not paths[name].exists():
            raise DataError(f"required file {name}.csv not found")
    return {k: p for k, p in paths.items() if p.exists()}


def load_dataset(source, schema_version: str = SCHEMA_VERSION, bar_minutes: int = 30) -> Dataset:
    """Load and validate a dataset from a directory or mapping of file paths.

    ``bar_minutes`` gives the granularity of ``bars.csv``; when it is finer
    than 30 the ``interval_index`` column counts those finer slots and the
    bars are aggregated onto the half-hour grid.
    """
    if schema_version != SCHEMA_VERSION:
        raise DataError(f"unsupported schema version {schema_version!r}")
    if bar_minutes <= 0 or 30 % bar_minutes:
        raise DataError("bar_minutes must divide 30")
    paths = resolve_paths(source)
    counts: dict[str, int] = {}

    securities: dict[str, SecurityRecord] = {}
    p = paths["securities"]
    for line, r in _open_rows(p, "securities"):
        sid = r["security_id"]
        if not sid:
            raise MalformedRow(line, "empty security_id", str(p))
        if sid in securities:
            raise DuplicateKey("security", sid)
        exch, ccy = r["exchange"], r["currency"]
        if EXCHANGE_CURRENCY.get(exch) != ccy:
            raise MalformedRow(line, f"exchange/currency pair ({exch},{ccy}) not allowed", str(p))
        cap = _parse(line, p, float, r["market_cap_usd"], "market_cap_usd")
        if not cap >= 0:
            raise MalformedRow(line, "market_cap_usd must be >= 0", str(p))
        securities[sid] = SecurityRecord(sid, exch, ccy, cap, r["sector"], r["dual_pair_id"] or None)
    counts["securities"] = len(securities)
    _check_pairs(securities)

    bars = _load_bars(paths["bars"], securities, bar_minutes)
    counts["bars"] = sum(len(v) for v in bars.values())
    counts["bar_days"] = len(bars)

    orders: dict[str, OrderRecord] = {}
    if "orders" in paths:
        p = paths["orders"]
        for line, r in _open_rows(p, "orders"):
            oid = r["order_id"]
            if oid in orders:
                raise DuplicateKey("order", oid)
            if r["security_id"] not in securities:
                raise UnknownReference("security", r["security_id"])
            side = r["side"].upper()
            if side not in ("BUY", "SELL"):
                raise MalformedRow(line, f"bad side {r['side']!r}", str(p))
            qty = _parse(line, p, _nonneg_int, r["total_shares"], "total_shares")
            if qty <= 0:
                raise MalformedRow(line, "total_shares must be positive", str(p))
            arrival = _parse(line, p, datetime.fromisoformat, r["arrival_ts"], "arrival_ts")
            end = _parse(line, p, datetime.fromisoformat, r["end_ts"], "end_ts")
            if end < arrival:
                raise MalformedRow(line, "end_ts before arrival_ts", str(p))
            px = _parse(line, p, _positive, r["arrival_price"], "arrival_price")
            orders[oid] = OrderRecord(oid, r["security_id"], side, qty, arrival, end, px)
    counts["orders"] = len(orders)

    fills: dict[str, list] = {}
    if "fills" in paths:
        p = paths["fills"]
        filled: dict[str, int] = {}
        for line, r in _open_rows(p, "fills"):
            oid = r["order_id"]
            if oid not in orders:
                raise UnknownReference("order", oid)
            ts = _parse(line, p, datetime.fromisoformat, r["ts"], "ts")
            qty = _parse(line, p, _nonneg_int, r["shares"], "shares")
            if qty <= 0:
                raise MalformedRow(line, "fill shares must be positive", str(p))
            px = _parse(line, p, _positive, r["price"], "price")
            filled[oid] = filled.get(oid, 0) + qty
            if filled[oid] > orders[oid].total_shares:
                raise MalformedRow(line, f"fills exceed order size for {oid}", str(p))
            fills.setdefault(oid, []).append(Fill(ts, qty, px))
    counts["fills"] = sum(len(v) for v in fills.values())

    fx: dict[date, float] = {}
    if "fx" in paths:
        p = paths["fx"]
        for line, r in _open_rows(p, "fx"):
            d = _parse(line, p, date.fromisoformat, r["date"], "date")
            if d in fx:
                raise DuplicateKey("fx", d.isoformat())
            fx[d] = _parse(line, p, _positive, r["hkd_per_cny"], "hkd_per_cny")
    counts["fx"] = len(fx)

    return Dataset(
        securities=MappingProxyType(securities),
        bars=MappingProxyType(bars),
        orders=MappingProxyType(orders),
        fills=MappingProxyType({k: tuple(sorted(v, key=lambda f: f.ts)) for k, v in fills.items()}),
        fx=MappingProxyType(fx),
        row_counts=MappingProxyType(counts),
    )


def _check_pairs(securities: Mapping[str, SecurityRecord]) -> None:
    legs: dict[str, list[SecurityRecord]] = {}
    for s in securities.values():
        if s.dual_pair_id:
            legs.setdefault(s.dual_pair_id, []).append(s)
    for pid, members in legs.items():
        exchanges = sorted(m.exchange for m in members)
        if exchanges != ["HK", "SH"]:
            if len(members) == 1:
                raise UnknownReference("dual_pair twin", pid)
            raise DuplicateKey("dual_pair", pid)


def _load_bars(p: Path, securities, bar_minutes: int) -> dict:
    per_slot = 30 // bar_minutes
    raw: dict[tuple, dict[int, list]] = {}
    seen = set()
    for line, r in _open_rows(p, "bars"):
        sid = r["security_id"]
        sec = securities.get(sid)
        if sec is None:
            raise UnknownReference("security", sid)
        d = _parse(line, p, date.fromisoformat, r["date"], "date")
        idx = _parse(line, p, _nonneg_int, r["interval_index"], "interval_index")
        if (sid, d, idx) in seen:
            raise DuplicateKey("bar", (sid, d.isoformat(), idx))
        seen.add((sid, d, idx))
        slot = idx // per_slot
        if slot >= session_length(sec.exchange):
            raise MalformedRow(line, f"interval_index {idx} outside the {sec.exchange} session", str(p))
        o, h, lo, c = (_parse(line, p, _positive, r[k], k) for k in ("open", "high", "low", "close"))
        if not (lo <= o <= h and lo <= c <= h):
            raise MalformedRow(line, "bar violates low <= open,close <= high", str(p))
        vol = _parse(line, p, _nonneg_int, r["volume"], "volume")
        have_ticks = bool(r["upticks"]) and bool(r["downticks"])
        up = _parse(line, p, _nonneg_int, r["upticks"], "upticks") if have_ticks else None
        dn = _parse(line, p, _nonneg_int, r["downticks"], "downticks") if have_ticks else None
        raw.setdefault((sid, d), {}).setdefault(slot, []).append((idx, o, h, lo, c, vol, up, dn))

    bars: dict[tuple, tuple] = {}
    for (sid, d), slots in sorted(raw.items()):
        day: list[IntradayBar] = []
        prev_close = None
        for slot in sorted(slots):
            parts = sorted(slots[slot])
            o, c = parts[0][1], parts[-1][4]
            h = max(x[2] for x in parts)
            lo = min(x[3] for x in parts)
            vol = sum(x[5] for x in parts)
            if all(x[6] is not None for x in parts):
                up = sum(x[6] for x in parts)
                dn = sum(x[7] for x in parts)
                derived = False
            else:
                # approximation: one tick in the direction of the close change
                ref = o if prev_close is None else prev_close
                up, dn = int(c > ref), int(c < ref)
                derived = True
            day.append(IntradayBar(sid, d, slot, o, h, lo, c, vol, up, dn, derived))
            prev_close = c
        bars[(sid, d)] = tuple(day)
    return bars


# --------------------------------------------------------------------------- curves


def _day_shares(dataset: Dataset, security_id: str, day: date) -> np.ndarray:
    n = session_length(dataset.securities[security_id].exchange)
    out = np.zeros(n)
    for b in dataset.day_bars(security_id, day):
        out[b.interval_index] += b.volume
    return out


def _fractions(shares: np.ndarray) -> tuple[np.ndarray, bool]:
    total = shares.sum()
    if total <= 0:
        return np.zeros_like(shares), True
    return shares / total, False


def build_volume_curve(dataset: Dataset, security_id: str, trading_date: date) -> VolumeCurve:
    """Per-slot share of the day's volume. Zero-volume days are flagged, not dropped."""
    shares = _day_shares(dataset, security_id, trading_date)
    fr, zero = _fractions(shares)
    return VolumeCurve(security_id, trading_date, tuple(fr.tolist()), zero, 1,
                       tuple(int(x) for x in shares))


def trailing_profile(dataset: Dataset, security_id: str, as_of_date: date,
                     window_days: int = 60) -> VolumeCurve:
    """Average daily volume fractions over up to ``window_days`` prior trading days.

    ``as_of_date`` itself is excluded; zero-volume days carry no profile and
    are skipped. ``days_used`` reports how many days entered the average.
    """
    days = dataset.prior_dates(security_id, as_of_date, window_days)
    curves = []
    for d in days:
        fr, zero = _fractions(_day_shares(dataset, security_id, d))
        if not zero:
            curves.append(fr)
    if not curves:
        raise NoData("trailing profile", security_id, as_of_date)
    if all(np.array_equal(curves[0], c) for c in curves[1:]):
        prof = curves[0].copy()
    else:
        prof = np.mean(np.vstack(curves), axis=0)
    return VolumeCurve(security_id, as_of_date, tuple(prof.tolist()), False, len(curves))


def average_daily_volume(dataset: Dataset, security_id: str, as_of_date: date,
                         window_days: int = 20) -> float:
    """Mean daily share volume over up to ``window_days`` trading days before ``as_of_date``."""
    days = dataset.prior_dates(security_id, as_of_date, window_days)
    if not days:
        raise NoData("ADV history", security_id, as_of_date)
    return float(np.mean([dataset.day_volume(security_id, d) for d in days]))


def bars_in_window(dataset: Dataset, security_id: str, start: datetime, end: datetime) -> list:
    """Bars of ``start``'s date whose slot overlaps ``[start, end]``."""
    exch = dataset.securities[security_id].exchange
    lo, hi = interval_of(exch, start), interval_of(exch, end)
    return [b for b in dataset.day_bars(security_id, start.date()) if lo <= b.interval_index <= hi]


def iter_securities(dataset: Dataset, ids: Optional[Iterable[str]] = None) -> list[str]:
    return sorted(ids) if ids is not None else sorted(dataset.securities)
