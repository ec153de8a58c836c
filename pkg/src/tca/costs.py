"""Per-order realized cost metrics.

Implementation shortfall (IS) is split into Market Impact (MI), the price
jumps attributed to the order's own executions, and Market Timing (MT), the
remainder. Two MI kernels are provided:

* simple:  sum over fills of ``max(dP_t, 0) * S_t``  (executed shares)
* complex: sum over fills of ``max(dP_t, 0) * W_t``  (shares still pending)

where ``dP_t = P_t - P_{t-1}`` side-adjusted and ``P_0`` is the arrival price.

Internally every cost is a non-negative-is-bad magnitude. The price walk is
done in exact rational arithmetic and basis points are rounded onto a
``2**-32`` grid, so ``is_bps == mi_bps + mt_bps`` holds bit-for-bit in
floating point for either kernel. Display sign flipping happens in
:func:`report_row`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import EmptyFills, NoData, PartialFill, ZeroDuration
from .market_data import (
    Dataset,
    Fill,
    OrderRecord,
    average_daily_volume,
    bars_in_window,
    build_volume_curve,
    interval_of,
    trailing_profile,
)

FORMULATIONS = ("simple", "complex")

_GRID = 2**32


class CostAmount(NamedTuple):
    currency: float
    bps: float


def _to_bps(amount: Fraction, arrival_notional: Fraction) -> float:
    # Snap to a dyadic grid: sums/differences of grid values stay exact in binary64.
    return round(amount * 10000 * _GRID / arrival_notional) / _GRID


@dataclass(frozen=True)
class FillWalk:
    """The fill sequence laid out for the decomposition.

    ``shares[t]``, ``prices[t]`` and ``pending[t]`` are S_t, P_t and W_t for
    t = 1..T (0-based here). ``moves[t]`` is the side-adjusted P_t - P_{t-1}.
    A partially filled order in partial mode carries one extra virtual fill of
    the remainder at the last observed price.
    """

    order: OrderRecord
    shares: tuple
    prices: tuple
    pending: tuple
    moves: tuple
    remaining: int = 0

    @property
    def partial(self) -> bool:
        return self.remaining > 0

    @property
    def arrival_notional(self) -> Fraction:
        return self.order.total_shares * Fraction(self.order.arrival_price)


def fill_walk(order: OrderRecord, fills: Sequence[Fill], allow_partial: bool = False) -> FillWalk:
    if not fills:
        raise EmptyFills(f"order {order.order_id} has no fills")
    shares = [int(f.shares) for f in fills]
    prices = [Fraction(f.price) for f in fills]
    remaining = order.total_shares - sum(shares)
    if remaining < 0:
        raise PartialFill(order.order_id, remaining)
    if remaining > 0:
        if not allow_partial:
            raise PartialFill(order.order_id, remaining)
        # unfilled remainder marked at the last observed price
        shares.append(remaining)
        prices.append(prices[-1])
    side = order.side_sign
    pending = []
    w = order.total_shares
    prev = Fraction(order.arrival_price)
    moves = []
    for s, p in zip(shares, prices):
        pending.append(w)
        moves.append(side * (p - prev))
        w -= s
        prev = p
    return FillWalk(order, tuple(shares), tuple(prices), tuple(pending), tuple(moves), remaining)


def _is_exact(walk: FillWalk) -> Fraction:
    p0 = Fraction(walk.order.arrival_price)
    total = sum((s * p for s, p in zip(walk.shares, walk.prices)), Fraction(0))
    return walk.order.side_sign * (total - walk.order.total_shares * p0)


def _mi_exact(walk: FillWalk, formulation: str) -> Fraction:
    if formulation == "simple":
        weights = walk.shares
    elif formulation == "complex":
        weights = walk.pending
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    return sum((max(m, 0) * w for m, w in zip(walk.moves, weights)), Fraction(0))


@dataclass(frozen=True)
class Decomposition:
    """IS / MI / MT for both kernels, sharing one set of intermediates."""

    is_currency: float
    is_bps: float
    mi_currency: dict
    mi_bps: dict
    mt_currency: dict
    mt_bps: dict
    partial: bool


def decompose(order: OrderRecord, fills: Sequence[Fill], allow_partial: bool = False) -> Decomposition:
    walk = fill_walk(order, fills, allow_partial)
    denom = walk.arrival_notional
    is_x = _is_exact(walk)
    is_bps = _to_bps(is_x, denom)
    mi_c, mi_b, mt_c, mt_b = {}, {}, {}, {}
    for form in FORMULATIONS:
        mi_x = _mi_exact(walk, form)
        mi_c[form] = float(mi_x)
        mi_b[form] = _to_bps(mi_x, denom)
        mt_c[form] = float(is_x - mi_x)
        mt_b[form] = is_bps - mi_b[form]
    return Decomposition(float(is_x), is_bps, mi_c, mi_b, mt_c, mt_b, walk.partial)


def implementation_shortfall(order: OrderRecord, fills: Sequence[Fill],
                             allow_partial: bool = False) -> CostAmount:
    """Executed cost versus the paper portfolio at the arrival price.

    BUY: ``sum(S_t P_t) - S P_0``; SELL is mirrored so a positive value is
    always a cost.
    """
    d = decompose(order, fills, allow_partial)
    return CostAmount(d.is_currency, d.is_bps)


def market_impact_simple(order: OrderRecord, fills: Sequence[Fill],
                         allow_partial: bool = False) -> CostAmount:
    d = decompose(order, fills, allow_partial)
    return CostAmount(d.mi_currency["simple"], d.mi_bps["simple"])


def market_impact_complex(order: OrderRecord, fills: Sequence[Fill],
                          allow_partial: bool = False) -> CostAmount:
    d = decompose(order, fills, allow_partial)
    return CostAmount(d.mi_currency["complex"], d.mi_bps["complex"])


def market_timing(order: OrderRecord, fills: Sequence[Fill], formulation: str = "complex",
                  allow_partial: bool = False) -> float:
    """IS minus MI in bps, from the same intermediates as both of them."""
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r}")
    return decompose(order, fills, allow_partial).mt_bps[formulation]


# --------------------------------------------------------------------------- auxiliary


def _duration_seconds(order: OrderRecord) -> float:
    secs = (order.end_ts - order.arrival_ts).total_seconds()
    if secs <= 0:
        raise ZeroDuration(f"order {order.order_id} has zero duration")
    return secs


def vwet(order: OrderRecord, fills: Sequence[Fill]) -> float:
    """Volume weighted execution time, in percent of the order window.

    0 means everything executed at arrival, 100 at the end, 50 an even spread.
    """
    if not fills:
        raise EmptyFills(f"order {order.order_id} has no fills")
    span = _duration_seconds(order)
    pos = [min(max((f.ts - order.arrival_ts).total_seconds() / span, 0.0), 1.0) for f in fills]
    vol = [f.shares for f in fills]
    return 100.0 * math.fsum(v * t for v, t in zip(vol, pos)) / sum(vol)


class AuxiliaryMetrics(NamedTuple):
    executions_per_minute: float
    avg_trade_size: float
    notional: float
    duration_minutes: float


def auxiliary_metrics(order: OrderRecord, fills: Sequence[Fill]) -> AuxiliaryMetrics:
    if not fills:
        raise EmptyFills(f"order {order.order_id} has no fills")
    minutes = _duration_seconds(order) / 60.0
    n = len(fills)
    return AuxiliaryMetrics(
        executions_per_minute=n / minutes,
        avg_trade_size=sum(f.shares for f in fills) / n,
        notional=math.fsum(f.shares * f.price for f in fills),
        duration_minutes=minutes,
    )


class SpreadMetrics(NamedTuple):
    spread_paid_pct: float
    spread_cost_bps: float


def spread_metrics(order: OrderRecord, fills: Sequence[Fill], dataset: Dataset,
                   half_spread_bps: float = 5.0) -> Optional[SpreadMetrics]:
    """Spread paid against a bar-midpoint proxy.

    Each fill is compared with the (high+low)/2 midpoint of the half-hour bar
    it printed in; the half spread is ``half_spread_bps`` of that midpoint.
    Percent paid is side-adjusted distance from mid over the half spread;
    cost is the same distance in bps of mid, negative when it is a cost.
    Both are notional weighted. Returns None when any fill has no bar.
    """
    if not fills or half_spread_bps <= 0:
        return None
    exch = dataset.securities[order.security_id].exchange
    side = order.side_sign
    notional, paid, cost = [], [], []
    for f in fills:
        day = dataset.bars.get((order.security_id, f.ts.date()))
        if not day:
            return None
        slot = interval_of(exch, f.ts)
        bar = next((b for b in day if b.interval_index == slot), None)
        if bar is None:
            return None
        mid = bar.mid
        dist = side * (f.price - mid) / mid
        notional.append(f.shares * f.price)
        paid.append(dist / (half_spread_bps / 10000.0))
        cost.append(dist * 10000.0)
    total = math.fsum(notional)
    return SpreadMetrics(
        spread_paid_pct=100.0 * math.fsum(n * x for n, x in zip(notional, paid)) / total,
        spread_cost_bps=-math.fsum(n * x for n, x in zip(notional, cost)) / total,
    )


# --------------------------------------------------------------------------- buckets

MOMENTUM_BANDS = ("Significant Adverse", "Adverse", "Neutral", "Favorable", "Significant Favorable")
VOLATILITY_BANDS = ("No Volatility", "Low Volatility", "Moderate Volatility", "High Volatility")
VEM_BANDS = ("Negligible Volume Shift", "Small Volume Shift", "Large Volume Shift")
CAP_BANDS = ("Small", "Mid", "Large")
ADV_BANDS = ("0-1%", "1-5%", "5-10%", "10-25%", "25-50%", "50%+")
_ADV_EDGES = (1.0, 5.0, 10.0, 25.0, 50.0)


def momentum_band(side_adjusted_return_pct: float) -> str:
    x = side_adjusted_return_pct
    if x < -2.0:
        return MOMENTUM_BANDS[0]
    if x < -1.0 / 3.0:
        return MOMENTUM_BANDS[1]
    if x <= 1.0 / 3.0:
        return MOMENTUM_BANDS[2]
    if x <= 2.0:
        return MOMENTUM_BANDS[3]
    return MOMENTUM_BANDS[4]


def volatility_band(cv: float) -> str:
    if cv <= 1e-15:
        return VOLATILITY_BANDS[0]
    if cv <= 0.0010:
        return VOLATILITY_BANDS[1]
    if cv <= 0.0050:
        return VOLATILITY_BANDS[2]
    return VOLATILITY_BANDS[3]


def vem_band(vem_pct: float) -> str:
    if vem_pct < 30.0:
        return VEM_BANDS[0]
    if vem_pct < 40.0:
        return VEM_BANDS[1]
    return VEM_BANDS[2]


def cap_band(market_cap_usd: float) -> str:
    if market_cap_usd < 1e9:
        return CAP_BANDS[0]
    if market_cap_usd < 1e10:
        return CAP_BANDS[1]
    return CAP_BANDS[2]


def adv_band(pct_adv: float) -> str:
    for edge, label in zip(_ADV_EDGES, ADV_BANDS):
        if pct_adv < edge:
            return label
    return ADV_BANDS[-1]


@dataclass(frozen=True)
class BucketLabels:
    side: str
    cap: str
    sector: str
    adv_band: str
    momentum: str
    volatility: str
    vem: str
    # the raw measures behind the labels
    pct_adv: float = float("nan")
    momentum_pct: float = float("nan")
    volatility_cv: float = float("nan")
    vem_pct: float = float("nan")


def volume_event_metric(dataset: Dataset, security_id: str, day, window_days: int = 60) -> float:
    """Summed absolute difference, in percent, between the day's volume curve
    and the trailing average profile."""
    today = np.asarray(build_volume_curve(dataset, security_id, day).fractions)
    prof = np.asarray(trailing_profile(dataset, security_id, day, window_days).fractions)
    return float(100.0 * np.abs(today - prof).sum())


def classify_buckets(order: OrderRecord, fills: Sequence[Fill], dataset: Dataset,
                     adv_window: int = 20, profile_window: int = 60) -> BucketLabels:
    sec = dataset.securities[order.security_id]
    bars = bars_in_window(dataset, order.security_id, order.arrival_ts, order.end_ts)
    if not bars:
        raise NoData("bars in order window", order.order_id)
    first, last = bars[0].open, bars[-1].close
    # rising prices hurt a buyer, so a BUY's adverse move is negative
    mom = -order.side_sign * 100.0 * (last - first) / first
    px = np.array([[b.open, b.high, b.low, b.close] for b in bars]).ravel()
    cv = float(px.std() / px.mean())
    vem = volume_event_metric(dataset, order.security_id, order.trading_date, profile_window)
    adv = average_daily_volume(dataset, order.security_id, order.trading_date, adv_window)
    pct_adv = 100.0 * order.total_shares / adv if adv > 0 else math.inf
    return BucketLabels(
        side=order.side,
        cap=cap_band(sec.market_cap_usd),
        sector=sec.sector,
        adv_band=adv_band(pct_adv),
        momentum=momentum_band(mom),
        volatility=volatility_band(cv),
        vem=vem_band(vem),
        pct_adv=pct_adv,
        momentum_pct=mom,
        volatility_cv=cv,
        vem_pct=vem,
    )


# --------------------------------------------------------------------------- report


@dataclass(frozen=True)
class CostReport:
    order_id: str
    security_id: str
    trading_date: str
    side: str
    total_shares: int
    arrival_price: float
    is_currency: float
    is_bps: float
    mi_simple_currency: float
    mi_simple_bps: float
    mi_complex_currency: float
    mi_complex_bps: float
    mt_simple_bps: float
    mt_complex_bps: float
    vwet_pct: float
    spread_paid_pct: Optional[float]
    spread_cost_bps: Optional[float]
    executions_per_minute: float
    avg_trade_size: float
    notional: float
    duration_minutes: float
    partial: bool
    buckets: BucketLabels
    mie_bps: Optional[float] = None
    extras: dict = field(default_factory=dict)


def cost_report(order: OrderRecord, fills: Sequence[Fill], dataset: Dataset, *,
                allow_partial: bool = False, half_spread_bps: float = 5.0,
                adv_window: int = 20, profile_window: int = 60) -> CostReport:
    d = decompose(order, fills, allow_partial)
    aux = auxiliary_metrics(order, fills)
    spread = spread_metrics(order, fills, dataset, half_spread_bps)
    buckets = classify_buckets(order, fills, dataset, adv_window, profile_window)
    return CostReport(
        order_id=order.order_id,
        security_id=order.security_id,
        trading_date=order.trading_date.isoformat(),
        side=order.side,
        total_shares=order.total_shares,
        arrival_price=order.arrival_price,
        is_currency=d.is_currency,
        is_bps=d.is_bps,
        mi_simple_currency=d.mi_currency["simple"],
        mi_simple_bps=d.mi_bps["simple"],
        mi_complex_currency=d.mi_currency["complex"],
        mi_complex_bps=d.mi_bps["complex"],
        mt_simple_bps=d.mt_bps["simple"],
        mt_complex_bps=d.mt_bps["complex"],
        vwet_pct=vwet(order, fills),
        spread_paid_pct=spread.spread_paid_pct if spread else None,
        spread_cost_bps=spread.spread_cost_bps if spread else None,
        executions_per_minute=aux.executions_per_minute,
        avg_trade_size=aux.avg_trade_size,
        notional=aux.notional,
        duration_minutes=aux.duration_minutes,
        partial=d.partial,
        buckets=buckets,
    )


COST_COLUMNS = (
    "order_id", "security_id", "date", "side", "total_shares", "arrival_price", "notional",
    "is_currency", "mi_simple_currency", "mi_complex_currency",
    "is_bps", "mi_simple_bps", "mi_complex_bps", "mt_simple_bps", "mt_complex_bps", "mie_bps",
    "vwet_pct", "spread_paid_pct", "spread_cost_bps",
    "executions_per_minute", "avg_trade_size", "duration_minutes", "partial",
    "bucket_side", "bucket_cap", "bucket_sector", "bucket_adv", "bucket_momentum",
    "bucket_volatility", "bucket_vem", "pct_adv", "momentum_pct", "volatility_cv", "vem_pct",
)


def report_row(r: CostReport) -> dict:
    """Flatten a report for output.

    Currency columns keep the internal sign (positive = cost). The IS/MI/MT
    bps columns are negated so costs display as negative numbers; spread cost
    is already negative-when-cost and ``mie_bps`` arrives in display sign.
    """
    b = r.buckets
    return {
        "order_id": r.order_id,
        "security_id": r.security_id,
        "date": r.trading_date,
        "side": r.side,
        "total_shares": r.total_shares,
        "arrival_price": r.arrival_price,
        "notional": r.notional,
        "is_currency": r.is_currency,
        "mi_simple_currency": r.mi_simple_currency,
        "mi_complex_currency": r.mi_complex_currency,
        "is_bps": -r.is_bps,
        "mi_simple_bps": -r.mi_simple_bps,
        "mi_complex_bps": -r.mi_complex_bps,
        "mt_simple_bps": -r.mt_simple_bps,
        "mt_complex_bps": -r.mt_complex_bps,
        "mie_bps": r.mie_bps,
        "vwet_pct": r.vwet_pct,
        "spread_paid_pct": r.spread_paid_pct,
        "spread_cost_bps": r.spread_cost_bps,
        "executions_per_minute": r.executions_per_minute,
        "avg_trade_size": r.avg_trade_size,
        "duration_minutes": r.duration_minutes,
        "partial": r.partial,
        "bucket_side": b.side,
        "bucket_cap": b.cap,
        "bucket_sector": b.sector,
        "bucket_adv": b.adv_band,
        "bucket_momentum": b.momentum,
        "bucket_volatility": b.volatility,
        "bucket_vem": b.vem,
        "pct_adv": b.pct_adv,
        "momentum_pct": b.momentum_pct,
        "volatility_cv": b.volatility_cv,
        "vem_pct": b.vem_pct,
    }


def as_dict(r: CostReport) -> dict:
    return asdict(r)
