"""Market Impact Estimate by Monte-Carlo simulation.

A hypothetical order of ``liquidity_demand_pct_adv`` percent of ADV is
spread over the chosen session slots in proportion to the trailing volume
profile. Each slot's shares are worked in clips; every clip first draws a
tick direction (up / down / flat, from that slot's historical frequencies)
and then a one-tick move size from the empirical distribution, moves the
price, and fills. Adverse moves are charged on the pending shares (complex
kernel) or on the clip itself (simple kernel). The path cost in bps of the
arrival notional is averaged over paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import date
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, InfeasibleSchedule, NoData
from .market_data import Dataset, average_daily_volume, session_length, trailing_profile
from .rng import path_uniforms, stream_id


@dataclass(frozen=True)
class MieParams:
    security_id: str = ""
    side: str = "BUY"
    liquidity_demand_pct_adv: float = 10.0
    start_interval: int = 0
    end_interval: Optional[int] = None  # exclusive; None = end of session
    lookback_days: int = 10
    num_paths: int = 1000
    seed: int = 0
    formulation: str = "complex"
    clip_fraction: float = 0.01
    adv_window: int = 20

    def window(self, n_slots: int) -> tuple[int, int]:
        end = n_slots if self.end_interval is None else self.end_interval
        if not 0 <= self.start_interval < end <= n_slots:
            raise ValueError(f"bad interval window [{self.start_interval}, {end}) for {n_slots} slots")
        return self.start_interval, end

    def duration(self, n_slots: int) -> int:
        a, b = self.window(n_slots)
        return b - a


@dataclass(frozen=True)
class MicrostructureModel:
    security_id: str
    as_of: date
    volume_fractions: np.ndarray
    p_up: np.ndarray
    p_down: np.ndarray
    p_flat: np.ndarray
    magnitudes: np.ndarray  # one-tick moves as a fraction of price, sorted
    reference_price: float
    adv: float
    median_bar_volume: float
    days_used: int

    def scaled(self, factor: float) -> "MicrostructureModel":
        return replace(self, magnitudes=self.magnitudes * factor)


@dataclass(frozen=True)
class MieResult:
    mie_bps: float  # display sign: cost is negative
    std_bps: float
    p5: float
    p95: float
    paths_run: int
    params: MieParams
    path_bps: Optional[np.ndarray] = None  # internal sign: positive = cost
    order_shares: int = 0
    reference_price: float = 0.0

    @property
    def notional(self) -> float:
        return self.order_shares * self.reference_price


def calibrate(dataset: Dataset, security_id: str, as_of_date: date, lookback_days: int = 10,
              adv_window: int = 20) -> MicrostructureModel:
    days = dataset.prior_dates(security_id, as_of_date, lookback_days)
    if not days:
        raise NoData("calibration history", security_id, as_of_date)
    n = session_length(dataset.securities[security_id].exchange)
    fractions = np.asarray(trailing_profile(dataset, security_id, as_of_date, lookback_days).fractions)

    ups = np.zeros(n)
    downs = np.zeros(n)
    flats = np.zeros(n)
    seen = np.zeros(n)
    mags: list[float] = []
    vols: list[int] = []
    for d in days:
        prev = None
        for b in dataset.day_bars(security_id, d):
            ref = b.open if prev is None else prev
            i = b.interval_index
            ups[i] += b.upticks
            downs[i] += b.downticks
            seen[i] += 1
            if b.close == ref:
                flats[i] += 1
            else:
                ticks = max(b.upticks + b.downticks, 1)
                mags.append(abs(b.close - ref) / ref / ticks)
            vols.append(b.volume)
            prev = b.close

    p_up = np.zeros(n)
    p_down = np.zeros(n)
    p_flat = np.ones(n)
    for i in range(n):
        moving = ups[i] + downs[i]
        if seen[i] == 0 or moving == 0:
            continue
        flat = flats[i] / seen[i]
        p_up[i] = (1.0 - flat) * ups[i] / moving
        p_down[i] = (1.0 - flat) * downs[i] / moving
        p_flat[i] = 1.0 - p_up[i] - p_down[i]

    magnitudes = np.sort(np.asarray(mags)) if mags else np.zeros(1)
    ref_price = dataset.daily_close(security_id, days[-1])
    adv = average_daily_volume(dataset, security_id, as_of_date, adv_window)
    return MicrostructureModel(
        security_id=security_id,
        as_of=as_of_date,
        volume_fractions=fractions,
        p_up=p_up,
        p_down=p_down,
        p_flat=p_flat,
        magnitudes=magnitudes,
        reference_price=ref_price,
        adv=adv,
        median_bar_volume=float(np.median(vols)) if vols else 0.0,
        days_used=len(days),
    )


def _allocate(total: int, weights: np.ndarray) -> np.ndarray:
    """Integer split of ``total`` proportional to ``weights`` (largest remainder)."""
    raw = total * weights / weights.sum()
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:short]] += 1
    return base


def schedule(model: MicrostructureModel, params: MieParams) -> tuple[int, np.ndarray, np.ndarray]:
    """Order size, per-execution clip sizes and the slot of each execution."""
    n = len(model.volume_fractions)
    a, b = params.window(n)
    weights = model.volume_fractions[a:b]
    if weights.sum() <= 0:
        raise InfeasibleSchedule(f"no historical volume in slots [{a}, {b}) for {model.security_id}")
    if model.adv <= 0:
        raise InfeasibleSchedule(f"zero ADV for {model.security_id}")
    size = max(int(round(params.liquidity_demand_pct_adv / 100.0 * model.adv)), 1)
    clip = max(int(model.median_bar_volume * params.clip_fraction), 1)
    sizes, slots = [], []
    for offset, q in enumerate(_allocate(size, weights)):
        k = -(-int(q) // clip)
        if k == 0:
            continue
        part, extra = divmod(int(q), k)
        sizes.extend([part + 1] * extra + [part] * (k - extra))
        slots.extend([a + offset] * k)
    return size, np.asarray(sizes, dtype=np.int64), np.asarray(slots, dtype=np.int64)


def _stream(params: MieParams, as_of: date) -> int:
    # Neither the security nor the demand enters the stream: both legs of a
    # pair, and every point of a demand sweep, see common random numbers.
    return stream_id(as_of.isoformat(), params.side, params.start_interval, params.end_interval)


def simulate(model: MicrostructureModel, params: MieParams) -> MieResult:
    if params.num_paths < 1:
        raise ValueError("num_paths must be >= 1")
    if params.formulation not in ("simple", "complex"):
        raise ValueError(f"unknown formulation {params.formulation!r}")
    if params.liquidity_demand_pct_adv <= 0:
        zeros = np.zeros(params.num_paths)
        return MieResult(0.0, 0.0, 0.0, 0.0, params.num_paths, params, zeros, 0, model.reference_price)

    size, clips, slots = schedule(model, params)
    pending = size - np.concatenate(([0], np.cumsum(clips)[:-1]))
    weights = pending if params.formulation == "complex" else clips

    u = path_uniforms(params.seed, _stream(params, model.as_of), params.num_paths, len(clips), 2)
    up_edge = model.p_up[slots]
    down_edge = up_edge + model.p_down[slots]
    direction = np.where(u[:, :, 0] < up_edge, 1.0, np.where(u[:, :, 0] < down_edge, -1.0, 0.0))
    m = len(model.magnitudes)
    pick = np.minimum((u[:, :, 1] * m).astype(np.int64), m - 1)
    moves = direction * model.magnitudes[pick] * model.reference_price
    side = 1.0 if params.side == "BUY" else -1.0
    adverse = np.maximum(side * moves, 0.0)
    cost = np.sum(adverse * weights, axis=1)
    path_bps = 10000.0 * cost / (size * model.reference_price)

    mean = math.fsum(path_bps.tolist()) / len(path_bps)
    std = float(np.std(path_bps, ddof=1)) if len(path_bps) > 1 else 0.0
    shown = -np.sort(path_bps)[::-1]
    p5, p95 = np.percentile(shown, [5.0, 95.0])
    return MieResult(-mean if mean else 0.0, std, float(p5) + 0.0, float(p95) + 0.0,
                     params.num_paths, params, path_bps, int(size), model.reference_price)


@dataclass(frozen=True)
class BatchCell:
    security_id: str
    date: date
    result: Optional[MieResult]
    error: Optional[str] = None


def batch_simulate(dataset: Dataset, security_ids: Sequence[str], dates: Iterable[date],
                   template: MieParams) -> list[BatchCell]:
    """One simulation per (security, date) with a shared parameter template.

    Per-cell data problems are recorded on the cell and the batch carries on.
    Securities are processed in id order, dates ascending.
    """
    dates = sorted(set(dates))
    cells = []
    for sid in sorted(security_ids):
        have = set(dataset.trading_dates(sid))
        for d in dates:
            if d not in have:
                cells.append(BatchCell(sid, d, None, f"NoData: {sid} does not trade on {d}"))
                continue
            params = replace(template, security_id=sid)
            try:
                model = calibrate(dataset, sid, d, params.lookback_days, params.adv_window)
                cells.append(BatchCell(sid, d, simulate(model, params)))
            except DataError as exc:
                cells.append(BatchCell(sid, d, None, f"{type(exc).__name__}: {exc}"))
    return cells
