"""Deterministic synthetic dual-listing datasets.

The generator builds a market with ``n_pairs`` HK/SH pairs whose HK leg
(converted to CNY) tracks the SH leg plus a gap. The gap is mean-reverting
for every pair but the last, which gets a random-walk gap so the dataset
holds both convergent and non-convergent pairs. Both exchanges keep their
own holiday calendars. Tick counts are written for every bar unless
``ticks=False``, in which case the loader derives them. Orders are placed once enough history exists
for ADV and profile windows and are always fully filled.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .market_data import interval_start, session_length

HOLIDAYS = {
    "HK": {date(2014, 9, 9), date(2014, 10, 1), date(2014, 10, 2)},
    "SH": {date(2014, 9, 8), date(2014, 10, 1), date(2014, 10, 2), date(2014, 10, 3),
           date(2014, 10, 6), date(2014, 10, 7)},
}
SECTORS = ("Financials", "Energy", "Industrials", "Materials", "Utilities")
CAPS_USD = ((6.0e8, 4.0e9), (4.0e9, 1.5e10), (4.5e10, 6.0e10), (2.0e9, 7.0e8), (9.0e8, 3.0e9))


@dataclass(frozen=True)
class FixtureSpec:
    n_pairs: int = 3
    n_days: int = 120
    last_day: date = date(2014, 11, 17)
    n_orders: int = 200
    seed: int = 20141117
    first_order_day: int = 25
    fx_level: float = 1.26
    ticks: bool = True


def union_calendar(n_days: int, last_day: date) -> list[date]:
    """The last ``n_days`` weekdays on which at least one exchange is open."""
    days, d = [], last_day
    while len(days) < n_days:
        if d.weekday() < 5 and not (d in HOLIDAYS["HK"] and d in HOLIDAYS["SH"]):
            days.append(d)
        d -= timedelta(days=1)
    return days[::-1]


def _profile(n: int) -> np.ndarray:
    x = np.linspace(-1.0, 1.0, n)
    p = 1.0 + 1.2 * x**2
    return p / p.sum()


def _tick(x: float) -> float:
    return round(float(max(x, 0.01)), 2)


def _intraday(rng, open_px: float, close_px: float, n: int, vol: float) -> np.ndarray:
    """Slot closes ending at ``close_px``: a Brownian bridge in log price."""
    steps = rng.normal(0.0, vol / np.sqrt(n), n)
    walk = np.cumsum(steps)
    t = np.arange(1, n + 1) / n
    bridge = walk - t * walk[-1]
    logp = np.log(open_px) + t * (np.log(close_px) - np.log(open_px)) + bridge
    return np.exp(logp)


def generate(spec: FixtureSpec = FixtureSpec()) -> dict[str, list[dict]]:
    """Build the five tables as lists of row dicts."""
    rng = np.random.default_rng(spec.seed)
    days = union_calendar(spec.n_days, spec.last_day)
    nd = len(days)
    fx = spec.fx_level * np.exp(np.cumsum(rng.normal(0.0, 0.001, nd)))

    securities, closes = [], {}
    for k in range(spec.n_pairs):
        pid = f"P{k + 1}"
        sh_id, hk_id = f"SH60{k + 1:04d}", f"HK{k + 1:04d}"
        cap_hk, cap_sh = CAPS_USD[k % len(CAPS_USD)]
        sector = SECTORS[k % len(SECTORS)]
        securities.append({"security_id": hk_id, "exchange": "HK", "currency": "HKD",
                           "market_cap_usd": cap_hk, "sector": sector, "dual_pair_id": pid})
        securities.append({"security_id": sh_id, "exchange": "SH", "currency": "CNY",
                           "market_cap_usd": cap_sh, "sector": sector, "dual_pair_id": pid})
        sh0 = 4.0 + 6.0 * k
        sh = sh0 * np.exp(np.cumsum(rng.normal(0.0004, 0.015, nd)))
        if k < spec.n_pairs - 1:
            gap = np.zeros(nd)
            e = rng.normal(0.0, 0.03 * sh0, nd)
            for i in range(1, nd):
                gap[i] = 0.3 * gap[i - 1] + e[i]
            gap += (-0.12 + 0.1 * k) * sh0
        else:
            gap = -0.2 * sh0 + np.cumsum(rng.normal(0.0, 0.02 * sh0, nd))
        hk_cny = np.maximum(sh + gap, 0.2 * sh)
        closes[sh_id] = sh
        closes[hk_id] = hk_cny * fx

    bars, daily_vol = [], {}
    base_vol = {s["security_id"]: int(2e6 * (1 + i % 3)) for i, s in enumerate(securities)}
    for s in securities:
        sid, exch = s["security_id"], s["exchange"]
        n = session_length(exch)
        prof = _profile(n)
        prev = None
        growth = 1.0 if exch == "HK" else 1.5
        for i, d in enumerate(days):
            if d in HOLIDAYS[exch]:
                continue
            close = float(closes[sid][i])
            open_px = close * np.exp(rng.normal(0, 0.004)) if prev is None else prev * np.exp(rng.normal(0, 0.003))
            path = _intraday(rng, open_px, close, n, 0.012)
            # a few days with a shifted volume profile (volume events)
            shift = rng.random() < 0.08
            w = prof * rng.gamma(20.0, 1.0 / 20.0, n)
            if shift:
                w = w * np.where(np.arange(n) >= n // 2, 3.0, 0.5)
            w = w / w.sum()
            day_vol = base_vol[sid] * (1.0 + (growth - 1.0) * i / nd) * float(np.exp(rng.normal(0, 0.25)))
            vols = np.floor(w * day_vol).astype(int)
            daily_vol[(sid, d)] = int(vols.sum())
            o = _tick(open_px)
            for j in range(n):
                c = _tick(path[j])
                hi = _tick(max(o, c) * (1 + abs(rng.normal(0, 0.002))))
                lo = _tick(min(o, c) * (1 - abs(rng.normal(0, 0.002))))
                hi, lo = max(hi, o, c), min(lo, o, c)
                row = {"security_id": sid, "date": d, "interval_index": j, "open": o, "high": hi,
                       "low": lo, "close": c, "volume": int(vols[j]), "upticks": "", "downticks": ""}
                if spec.ticks:
                    total = max(1, int(vols[j]) // 5000)
                    p_up = 0.5 + (0.15 if c > o else -0.15 if c < o else 0.0)
                    up = int(rng.binomial(total, p_up))
                    row["upticks"], row["downticks"] = up, total - up
                bars.append(row)
                o = c
            prev = _tick(path[-1])

    bar_index = {(r["security_id"], r["date"], r["interval_index"]): r for r in bars}
    orders, fills = [], []
    sec_ids = [s["security_id"] for s in securities]
    exch_of = {s["security_id"]: s["exchange"] for s in securities}
    k = 0
    while len(orders) < spec.n_orders:
        sid = sec_ids[int(rng.integers(len(sec_ids)))]
        exch = exch_of[sid]
        i = int(rng.integers(spec.first_order_day, nd))
        d = days[i]
        if d in HOLIDAYS[exch]:
            continue
        prior = [x for x in days[:i] if x not in HOLIDAYS[exch]][-20:]
        adv = sum(daily_vol[(sid, x)] for x in prior) / len(prior)
        pct = float(np.exp(rng.uniform(np.log(0.3), np.log(80.0))))
        qty = max(200, int(round(pct / 100.0 * adv / 100.0)) * 100)
        n = session_length(exch)
        dur = int(rng.integers(1, 5))
        a = int(rng.integers(0, n - dur + 1))
        arrival = interval_start(exch, d, a) + timedelta(minutes=int(rng.integers(0, 5)))
        end = interval_start(exch, d, a + dur - 1) + timedelta(minutes=29)
        arrival_px = bar_index[(sid, d, a)]["open"]
        k += 1
        oid = f"O{k:04d}"
        side = "BUY" if rng.random() < 0.5 else "SELL"
        sign = 1 if side == "BUY" else -1
        nf = int(min(rng.integers(1, 13), qty // 100))
        lots = rng.multinomial(qty // 100 - nf, np.full(nf, 1.0 / nf)) + 1
        times = []
        for _ in range(nf):
            slot = a + int(rng.integers(0, dur))
            t = interval_start(exch, d, slot) + timedelta(minutes=int(rng.integers(0, 30)))
            times.append(min(max(t, arrival), end))
        times.sort()
        for t, lot in zip(times, lots):
            slot = min(a + dur - 1, max(a, [j for j in range(n) if interval_start(exch, d, j) <= t][-1]))
            b = bar_index[(sid, d, slot)]
            mid = (b["high"] + b["low"]) / 2.0
            px = _tick(mid * (1 + sign * abs(rng.normal(0.0004, 0.0006))))
            fills.append({"order_id": oid, "ts": t, "shares": int(lot) * 100, "price": px})
        orders.append({"order_id": oid, "security_id": sid, "side": side, "total_shares": qty,
                       "arrival_ts": arrival, "end_ts": end, "arrival_price": arrival_px})

    fx_rows = [{"date": d, "hkd_per_cny": round(float(fx[i]), 6)} for i, d in enumerate(days)]
    return {"securities": securities, "bars": bars, "orders": orders, "fills": fills, "fx": fx_rows}


_COLUMNS = {
    "securities": ("security_id", "exchange", "currency", "market_cap_usd", "sector", "dual_pair_id"),
    "bars": ("security_id", "date", "interval_index", "open", "high", "low", "close", "volume",
             "upticks", "downticks"),
    "orders": ("order_id", "security_id", "side", "total_shares", "arrival_ts", "end_ts", "arrival_price"),
    "fills": ("order_id", "ts", "shares", "price"),
    "fx": ("date", "hkd_per_cny"),
}


def _cell(v) -> str:
    if isinstance(v, (date, datetime)):
        return v.isoformat()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_fixture(out_dir: Path, spec: FixtureSpec = FixtureSpec()) -> dict[str, int]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = generate(spec)
    for name, rows in tables.items():
        with open(out_dir / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(_COLUMNS[name])
            for r in rows:
                w.writerow([_cell(r[c]) for c in _COLUMNS[name]])
    return {k: len(v) for k, v in tables.items()}
