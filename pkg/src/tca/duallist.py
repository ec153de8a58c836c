"""Dual-listing analytics: HK/SH premium, price and volume indices, and
cross-sectional premium tables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import MissingBasePrice, MissingFx, NoData, NoOverlap, ZeroBase
from .market_data import Dataset


@dataclass(frozen=True)
class PremiumPoint:
    pair_id: str
    date: date
    hk_price_cny: float
    sh_price_cny: float
    premium_pct: float

    @property
    def sign(self) -> str:
        if self.premium_pct > 0:
            return "positive"
        if self.premium_pct < 0:
            return "negative"
        return "zero"


@dataclass(frozen=True)
class PremiumSeries:
    pair_id: str
    points: tuple
    dropped_days: int  # days where only one leg traded


@dataclass(frozen=True)
class IndexSeries:
    name: str
    dates: tuple
    values: tuple
    weighting: str


def premium_pct(hk_price_hkd: float, sh_price_cny: float, hkd_per_cny: float) -> float:
    """HK price over SH price minus one, in percent, with HK converted to CNY."""
    return 100.0 * (hk_price_hkd / hkd_per_cny - sh_price_cny) / sh_price_cny


def premium_series(dataset: Dataset, pair_id: str) -> PremiumSeries:
    try:
        hk, sh = dataset.pairs()[pair_id]
    except KeyError:
        raise NoData("dual pair", pair_id) from None
    hk_days = set(dataset.trading_dates(hk))
    sh_days = set(dataset.trading_dates(sh))
    common = sorted(hk_days & sh_days)
    if not common:
        raise NoOverlap(f"pair {pair_id} has no common trading dates")
    points = []
    for d in common:
        if d not in dataset.fx:
            raise MissingFx(d)
        fx = dataset.fx[d]
        hk_px = dataset.daily_close(hk, d)
        sh_px = dataset.daily_close(sh, d)
        points.append(PremiumPoint(pair_id, d, hk_px / fx, sh_px, premium_pct(hk_px, sh_px, fx)))
    return PremiumSeries(pair_id, tuple(points), len(hk_days ^ sh_days))


def daily_premium_aggregates(dataset: Dataset, series: Sequence[PremiumSeries]) -> list[dict]:
    """Cross-pair daily averages (all / positive / negative premium), the
    share-volume weighted average over both legs, and sign counts."""
    pairs = dataset.pairs()
    by_date: dict[date, list] = {}
    for s in series:
        hk, sh = pairs[s.pair_id]
        for p in s.points:
            vol = dataset.day_volume(hk, p.date) + dataset.day_volume(sh, p.date)
            by_date.setdefault(p.date, []).append((p, vol))
    rows = []
    for d in sorted(by_date):
        pts = by_date[d]
        prem = np.array([p.premium_pct for p, _ in pts])
        vols = np.array([v for _, v in pts], dtype=float)
        pos, neg = prem[prem > 0], prem[prem < 0]
        rows.append({
            "date": d,
            "avg_all": float(prem.mean()),
            "avg_positive": float(pos.mean()) if len(pos) else math.nan,
            "avg_negative": float(neg.mean()) if len(neg) else math.nan,
            "vw_all": float((prem * vols).sum() / vols.sum()) if vols.sum() > 0 else math.nan,
            "count_positive": int(len(pos)),
            "count_negative": int(len(neg)),
            "count_zero": int(len(prem) - len(pos) - len(neg)),
        })
    return rows


def _close_table(dataset: Dataset, universe: Sequence[str]):
    """Union of trading dates and last-known closes (no look-ahead fill)."""
    dates = sorted({d for sid in universe for d in dataset.trading_dates(sid)})
    closes = np.full((len(dates), len(universe)), np.nan)
    for j, sid in enumerate(universe):
        have = set(dataset.trading_dates(sid))
        last = np.nan
        for i, d in enumerate(dates):
            if d in have:
                last = dataset.daily_close(sid, d)
            closes[i, j] = last
    return dates, closes


def price_index(dataset: Dataset, universe: Iterable[str], weighting: str = "market_cap",
                rebalance: str = "fixed", name: str = "price_index") -> IndexSeries:
    """Weighted average of price relatives, 1 at the first date.

    ``value_t = sum_i w_i * P_it / P_i0`` with weights set on the base date
    (market cap, equal, or base-date share volume). ``rebalance="daily"``
    instead chains daily returns with the same base weights reset every day.
    """
    universe = sorted(universe)
    if not universe:
        raise NoData("index universe")
    dates, closes = _close_table(dataset, universe)
    for j, sid in enumerate(universe):
        if not np.isfinite(closes[0, j]):
            raise MissingBasePrice(sid)
    if weighting == "market_cap":
        w = np.array([dataset.securities[s].market_cap_usd for s in universe], dtype=float)
    elif weighting == "equal":
        w = np.ones(len(universe))
    elif weighting == "volume":
        w = np.array([dataset.day_volume(s, dates[0]) for s in universe], dtype=float)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    if w.sum() <= 0:
        raise ZeroBase("index weights sum to zero")
    w = w / w.sum()
    rel = closes / closes[0]
    if rebalance == "fixed":
        vals = rel @ w
    elif rebalance == "daily":
        step = np.ones(len(dates))
        step[1:] = (closes[1:] / closes[:-1]) @ w
        vals = np.cumprod(step)
    else:
        raise ValueError(f"unknown rebalance {rebalance!r}")
    vals[0] = 1.0
    return IndexSeries(name, tuple(dates), tuple(float(v) for v in vals), weighting)


def volume_index(dataset: Dataset, universe: Iterable[str], name: str = "volume_index") -> IndexSeries:
    """Turnover at base-date prices, normalised to 1 on the first date.

    Valuing every day's share volume at the base-date price strips out price
    changes, leaving only growth in what is traded. HK legs are converted to
    CNY at the base-date rate when FX is available; a security that does not
    trade on a date contributes nothing that day.
    """
    universe = sorted(universe)
    if not universe:
        raise NoData("index universe")
    dates = sorted({d for sid in universe for d in dataset.trading_dates(sid)})
    base = dates[0]
    fx0 = dataset.fx.get(base, 1.0)
    base_px = {}
    for sid in universe:
        if base not in set(dataset.trading_dates(sid)):
            raise MissingBasePrice(sid)
        px = dataset.daily_close(sid, base)
        if dataset.securities[sid].currency == "HKD":
            px /= fx0
        base_px[sid] = px
    turnover = np.zeros(len(dates))
    for i, d in enumerate(dates):
        turnover[i] = sum(dataset.day_volume(sid, d) * base_px[sid]
                          for sid in universe if (sid, d) in dataset.bars)
    if turnover[0] <= 0:
        raise ZeroBase("base-date turnover is zero")
    vals = turnover / turnover[0]
    vals[0] = 1.0
    return IndexSeries(name, tuple(dates), tuple(float(v) for v in vals), "volume")


def premium_cross_sections(dataset: Dataset, series: Optional[Sequence[PremiumSeries]] = None) -> list[dict]:
    """Average premium per pair with combined market cap (USD bn) and combined
    turnover (CNY bn, both legs' share volume priced at the SH close)."""
    pairs = dataset.pairs()
    if series is None:
        series = [premium_series(dataset, pid) for pid in pairs]
    rows = []
    for s in series:
        hk, sh = pairs[s.pair_id]
        cap = dataset.securities[hk].market_cap_usd + dataset.securities[sh].market_cap_usd
        turnover = math.fsum((dataset.day_volume(hk, p.date) + dataset.day_volume(sh, p.date)) * p.sh_price_cny
                             for p in s.points)
        rows.append({
            "pair_id": s.pair_id,
            "avg_premium_pct": float(np.mean([p.premium_pct for p in s.points])),
            "combined_cap_usd_bn": cap / 1e9,
            "combined_turnover_cny_bn": turnover / 1e9,
            "days": len(s.points),
            "dropped_days": s.dropped_days,
        })
    return rows
