"""``tca`` command-line driver.

Five subcommands share one configuration file and a set of override flags:

``costs``     per-order cost reports, with a per-order MIE, after filters
``simulate``  MIE grid over securities x dates x sides x demands
``stats``     stationarity and convergence batteries, MIE time trends and
              HK-vs-SH Welch tests, and the MZ suite on the cost reports
``premium``   dual-listing premium, price and volume indices, cross sections
``curves``    intraday volume curves on the configured key dates

Exit codes: 0 ok, 1 usage, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time
import traceback
from dataclasses import replace
from datetime import date, timedelta
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import stats
from .config import AnalysisConfig, ConfigError, apply_overrides, load_config
from .costs import COST_COLUMNS, adv_band, cap_band, cost_report, report_row
from .duallist import (
    daily_premium_aggregates,
    premium_cross_sections,
    premium_series,
    price_index,
    volume_index,
)
from .errors import DataError, TCAError
from .market_data import (
    Dataset,
    average_daily_volume,
    build_volume_curve,
    interval_of,
    load_dataset,
    resolve_paths,
    session_length,
)
from .mie import MieParams, batch_simulate, calibrate, simulate
from .report import read_csv, write_csv, write_json, write_manifest

log = logging.getLogger("tca")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

MIE_COLUMNS = ("security_id", "exchange", "date", "side", "demand_pct_adv", "start_interval",
               "duration", "paths", "seed", "order_shares", "notional", "mie_bps", "std_bps",
               "p5", "p95")
PREMIUM_COLUMNS = ("pair_id", "date", "hk_price_cny", "sh_price_cny", "premium_pct", "sign")
INDEX_COLUMNS = ("series", "date", "value")
CROSS_COLUMNS = ("pair_id", "avg_premium_pct", "combined_cap_usd_bn", "combined_turnover_cny_bn",
                 "days", "dropped_days")
CURVE_COLUMNS = ("security_id", "exchange", "key_date", "event", "interval_index", "fraction",
                 "shares", "zero_volume")
STATIONARITY_COLUMNS = ("universe", "series", "series_count", "tested", "adf_stationary",
                        "kpss_stationary", "pp_stationary", "converging")


class Run:
    """Per-command bookkeeping that ends up in the manifest."""

    def __init__(self, command: str, cfg: AnalysisConfig):
        self.command = command
        self.cfg = cfg
        self.t0 = time.perf_counter()
        self.timings: dict = {}
        self.row_counts: dict = {}
        self.inputs: dict = {}
        self.outputs: dict = {}
        self.notes: dict = {}
        self._mark = self.t0

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        self.timings[name] = round(now - self._mark, 6)
        self._mark = now

    def out(self, name: str) -> Path:
        p = Path(self.cfg.output_dir) / name
        self.outputs[name] = p
        return p

    def finish(self) -> dict:
        self.timings["total"] = round(time.perf_counter() - self.t0, 6)
        if self.cfg.source is not None:
            self.inputs["config"] = Path(self.cfg.source)
        return write_manifest(Path(self.cfg.output_dir) / f"manifest_{self.command}.json",
                              command=self.command, config=self.cfg.echo(), inputs=self.inputs,
                              row_counts=self.row_counts, timings=self.timings,
                              outputs=self.outputs, notes=self.notes)


def _load(run: Run) -> Dataset:
    cfg = run.cfg
    if cfg.data_dir is None:
        raise ConfigError("no data directory: set [data] dir, --data-dir or TCA_DATA_DIR")
    for name, p in resolve_paths(cfg.data_dir).items():
        run.inputs[f"{name}.csv"] = p
    ds = load_dataset(cfg.data_dir, bar_minutes=cfg.bar_minutes)
    run.row_counts["input"] = dict(ds.row_counts)
    run.stage("load")
    return ds


def _restrict(ds: Dataset, cfg: AnalysisConfig) -> Dataset:
    """Bars, FX and orders limited to the configured date range."""
    return replace(
        ds,
        bars={k: v for k, v in ds.bars.items() if cfg.in_range(k[1])},
        fx={d: v for d, v in ds.fx.items() if cfg.in_range(d)},
        orders={k: o for k, o in ds.orders.items() if cfg.in_range(o.trading_date)},
    )


# --------------------------------------------------------------------------- costs


def _order_window(ds: Dataset, order) -> tuple[int, int]:
    exch = ds.securities[order.security_id].exchange
    n = session_length(exch)
    a = interval_of(exch, order.arrival_ts)
    b = interval_of(exch, max(order.arrival_ts, order.end_ts - timedelta(seconds=1))) + 1
    return a, min(max(b, a + 1), n)


def order_mie(ds: Dataset, order, pct_adv: float, cfg: AnalysisConfig) -> Optional[float]:
    """MIE for a real order: same security, side, demand and slot window."""
    if not math.isfinite(pct_adv) or pct_adv <= 0:
        return None
    a, b = _order_window(ds, order)
    t = cfg.mie
    params = MieParams(security_id=order.security_id, side=order.side,
                       liquidity_demand_pct_adv=pct_adv, start_interval=a, end_interval=b,
                       lookback_days=t.lookback_days, num_paths=t.order_paths, seed=cfg.seed,
                       formulation=t.formulation, clip_fraction=t.clip_fraction,
                       adv_window=cfg.adv_window)
    try:
        model = calibrate(ds, order.security_id, order.trading_date, t.lookback_days, cfg.adv_window)
        return simulate(model, params).mie_bps
    except DataError:
        return None


def cmd_costs(cfg: AnalysisConfig) -> dict:
    run = Run("costs", cfg)
    ds = _load(run)
    orders = sorted((o for o in ds.orders.values() if cfg.in_range(o.trading_date)),
                    key=lambda o: o.order_id)
    reports, no_mie = [], 0
    for o in orders:
        r = cost_report(o, ds.fills.get(o.order_id, ()), ds, allow_partial=cfg.allow_partial,
                        half_spread_bps=cfg.half_spread_bps, adv_window=cfg.adv_window,
                        profile_window=cfg.profile_window)
        mie = order_mie(ds, o, r.buckets.pct_adv, cfg)
        no_mie += mie is None
        reports.append(replace(r, mie_bps=mie))
    run.stage("cost_engine")

    excluded = {"zero_impact": 0, "adv_50plus": 0}
    kept = []
    for r in reports:
        mi = r.mi_complex_bps if cfg.mi_formulation == "complex" else r.mi_simple_bps
        if cfg.filter_zero_impact and mi == 0:
            excluded["zero_impact"] += 1
            continue
        if cfg.exclude_50plus_adv and r.buckets.adv_band == "50%+":
            excluded["adv_50plus"] += 1
            continue
        kept.append(r)
    rows = [report_row(r) for r in kept]
    write_csv(run.out("cost_reports.csv"), COST_COLUMNS, rows)
    write_json(run.out("cost_reports.json"), {"columns": list(COST_COLUMNS), "orders": rows})
    run.stage("write")
    run.row_counts.update(orders=len(orders), reported=len(rows), excluded=excluded, without_mie=no_mie)
    return run.finish()


# --------------------------------------------------------------------------- simulate


def simulation_dates(ds: Dataset, cfg: AnalysisConfig) -> list[date]:
    start = cfg.mie.start or cfg.start
    end = cfg.mie.end or cfg.end
    return [d for d in ds.all_dates()
            if (start is None or d >= start) and (end is None or d <= end)]


def cmd_simulate(cfg: AnalysisConfig) -> dict:
    run = Run("simulate", cfg)
    ds = _load(run)
    ids = sorted(ds.securities)
    dates = simulation_dates(ds, cfg)
    t = cfg.mie
    rows, errors = [], []
    for side in t.sides:
        for demand in t.demands_pct_adv:
            template = MieParams(side=side, liquidity_demand_pct_adv=demand,
                                 start_interval=t.start_interval, end_interval=t.end_interval,
                                 lookback_days=t.lookback_days, num_paths=t.num_paths,
                                 seed=cfg.seed, formulation=t.formulation,
                                 clip_fraction=t.clip_fraction, adv_window=cfg.adv_window)
            for cell in batch_simulate(ds, ids, dates, template):
                if cell.error:
                    errors.append({"security_id": cell.security_id, "date": cell.date.isoformat(),
                                   "side": side, "demand_pct_adv": demand, "error": cell.error})
                    continue
                res = cell.result
                n = session_length(ds.securities[cell.security_id].exchange)
                rows.append({
                    "security_id": cell.security_id,
                    "exchange": ds.securities[cell.security_id].exchange,
                    "date": cell.date, "side": side, "demand_pct_adv": float(demand),
                    "start_interval": t.start_interval, "duration": res.params.duration(n),
                    "paths": res.paths_run, "seed": cfg.seed,
                    "order_shares": res.order_shares, "notional": res.notional,
                    "mie_bps": res.mie_bps, "std_bps": res.std_bps, "p5": res.p5, "p95": res.p95,
                })
    run.stage("simulate")
    rows.sort(key=lambda r: (r["security_id"], r["date"], r["side"], r["demand_pct_adv"]))
    write_csv(run.out("mie_results.csv"), MIE_COLUMNS, rows)
    run.stage("write")
    run.row_counts.update(cells=len(rows) + len(errors), results=len(rows), failed_cells=len(errors))
    run.notes["cell_errors"] = errors
    return run.finish()


# --------------------------------------------------------------------------- stats


def _safe(fn: Callable, *args, **kwargs) -> dict:
    """Run one analysis; a data problem becomes an ``{"error": ...}`` entry."""
    try:
        out = fn(*args, **kwargs)
    except (TCAError, ValueError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    if isinstance(out, dict):
        return {k: _todict(v) for k, v in out.items()}
    return _todict(out)


def _todict(v):
    if hasattr(v, "to_dict"):
        return v.to_dict()
    if isinstance(v, dict):
        return {k: _todict(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_todict(x) for x in v]
    return v


def _daily_series(ds: Dataset, sid: str, what: str) -> np.ndarray:
    days = ds.trading_dates(sid)
    if what == "price":
        return np.array([ds.daily_close(sid, d) for d in days])
    return np.array([ds.day_volume(sid, d) for d in days], dtype=float)


def _stationarity_rows(ds: Dataset, cfg: AnalysisConfig) -> tuple[list, dict]:
    universes = {
        "all": sorted(ds.securities),
        "HK": sorted(s for s, r in ds.securities.items() if r.exchange == "HK"),
        "SH": sorted(s for s, r in ds.securities.items() if r.exchange == "SH"),
    }
    rows, report = [], {}
    for uname, ids in universes.items():
        for what in ("price", "volume"):
            c = stats.stationarity_counts({s: _daily_series(ds, s, what) for s in ids}, cfg.alpha)
            rows.append({"universe": uname, "series": what, "series_count": c["series"],
                         "tested": c["tested"], "adf_stationary": c["adf_stationary"],
                         "kpss_stationary": c["kpss_stationary"], "pp_stationary": c["pp_stationary"]})
            report.setdefault(uname, {})[what] = c
    return rows, report


def _convergence(ds: Dataset, cfg: AnalysisConfig) -> tuple[list, dict]:
    reports, per_pair = [], {}
    for pid, (hk, sh) in ds.pairs().items():
        try:
            s = premium_series(ds, pid)
            hk_px = [ds.daily_close(hk, p.date) for p in s.points]
            sh_px = [p.sh_price_cny for p in s.points]
            fx = [ds.fx[p.date] for p in s.points]
            rep = stats.convergence_battery(hk_px, sh_px, fx, pid, cfg.alpha, cfg.spread_intercept)
        except TCAError as exc:
            per_pair[pid] = {"error": f"{type(exc).__name__}: {exc}"}
            continue
        reports.append(rep)
        per_pair[pid] = rep.to_dict()
    counts = stats.convergence_counts(reports, cfg.alpha)
    rows = [{"universe": "dual_pairs", "series": c["combination"], "series_count": c["pairs"],
             "tested": c["tested"], "adf_stationary": c["adf_stationary"],
             "kpss_stationary": c["kpss_stationary"], "pp_stationary": c["pp_stationary"],
             "converging": c["converging"]} for c in counts]
    return rows, {"pairs": per_pair, "counts": counts}


def _mie_groups(rows: list[dict], ds: Dataset) -> dict[str, list[dict]]:
    groups: dict[str, list] = {"all": rows}
    for r in rows:
        sec = ds.securities.get(r["security_id"])
        keys = [f"side:{r['side']}", f"demand:{adv_band(float(r['demand_pct_adv']))}"]
        if sec is not None:
            keys += [f"cap:{cap_band(sec.market_cap_usd)}", f"sector:{sec.sector}"]
        for k in keys:
            groups.setdefault(k, []).append(r)
    return dict(sorted(groups.items()))


def _mie_analyses(ds: Dataset, cfg: AnalysisConfig, mie_rows: list[dict]) -> tuple[dict, dict]:
    if cfg.exclude_50plus_adv:
        mie_rows = [r for r in mie_rows if float(r["demand_pct_adv"]) < 50.0]
    lo, hi = cfg.subsample_window()
    samples = {
        "full": mie_rows,
        "last_two_months": [r for r in mie_rows if lo <= date.fromisoformat(r["date"]) <= hi],
    }
    trends: dict = {}
    welch: dict = {}
    for sname, srows in samples.items():
        for gname, grows in _mie_groups(srows, ds).items():
            by_exch = {e: [r for r in grows if r["exchange"] == e] for e in ("HK", "SH")}
            for exch, er in by_exch.items():
                dates = [r["date"] for r in er]
                vals = [float(r["mie_bps"]) for r in er]
                w = [float(r["notional"]) for r in er] if cfg.weighting == "notional" else None
                trends.setdefault(sname, {}).setdefault(gname, {})[exch] = _safe(
                    stats.time_trend, dates, vals, w)
            welch.setdefault(sname, {})[gname] = _safe(
                stats.welch_t, [float(r["mie_bps"]) for r in by_exch["HK"]],
                [float(r["mie_bps"]) for r in by_exch["SH"]], "less")
    return trends, welch


def _trailing_vol(ds: Dataset, sid: str, day: date, calendar_days: int = 90) -> float:
    """Standard deviation of daily log returns over the trailing calendar window."""
    days = [d for d in ds.trading_dates(sid) if day - timedelta(days=calendar_days) <= d < day]
    if len(days) < 3:
        return math.nan
    px = np.array([ds.daily_close(sid, d) for d in days])
    return float(np.std(np.diff(np.log(px)), ddof=1))


def _mz_suite(ds: Dataset, cfg: AnalysisConfig, cost_rows: list[dict]) -> dict:
    actual_col = f"mi_{cfg.mi_formulation}_bps"
    rows = [r for r in cost_rows if r["mie_bps"] not in ("", "nan")]
    if cfg.filter_zero_impact:
        rows = [r for r in rows if float(r[actual_col]) != 0.0]
    if cfg.exclude_50plus_adv:
        rows = [r for r in rows if r["bucket_adv"] != "50%+"]
    out: dict = {"nobs": len(rows), "actual": actual_col, "predicted": "mie_bps"}
    subsets = {"all": rows}
    for exch in ("HK", "SH"):
        subsets[exch] = [r for r in rows if ds.securities[r["security_id"]].exchange == exch]
    for name, sub in subsets.items():
        out[name] = _safe(stats.mincer_zarnowitz, [float(r[actual_col]) for r in sub],
                          [float(r["mie_bps"]) for r in sub], cfg.mz_bands)
    if not rows:
        return out
    actual = [float(r[actual_col]) for r in rows]
    pred = [float(r["mie_bps"]) for r in rows]
    blocks = {
        "pre_trade": ("bucket_side", "bucket_cap", "bucket_sector", "bucket_adv"),
        "environment": ("bucket_momentum", "bucket_volatility", "bucket_vem"),
    }
    for bname, cols in blocks.items():
        dummies = {}
        for c in cols:
            mat, names = stats.dummies_from_labels([r[c] for r in rows], prefix=f"{c[7:]}:")
            for j, n in enumerate(names):
                dummies[n] = mat[:, j]
        out[f"dummies_{bname}"] = _safe(stats.mz_with_dummies, actual, pred, dummies or None)
    vol = [_trailing_vol(ds, r["security_id"], date.fromisoformat(r["date"])) for r in rows]
    keep = [i for i, v in enumerate(vol) if math.isfinite(v)]
    extras = {
        "ln_shares": [math.log(float(rows[i]["total_shares"])) for i in keep],
        "arrival_price": [float(rows[i]["arrival_price"]) for i in keep],
        "volatility_90d": [vol[i] for i in keep],
    }
    out["extras"] = _safe(stats.mz_with_dummies, [actual[i] for i in keep], [pred[i] for i in keep],
                          None, extras)
    return out


def cmd_stats(cfg: AnalysisConfig) -> dict:
    run = Run("stats", cfg)
    full = _load(run)
    ds = _restrict(full, cfg)
    srows, sreport = _stationarity_rows(ds, cfg)
    run.stage("stationarity")
    crows, creport = _convergence(ds, cfg)
    run.stage("convergence")
    report: dict = {"stationarity": sreport, "convergence": creport}

    out_dir = Path(cfg.output_dir)
    mie_path = out_dir / "mie_results.csv"
    if mie_path.exists():
        run.inputs["mie_results.csv"] = mie_path
        trends, welch = _mie_analyses(full, cfg, read_csv(mie_path))
        report["time_trend"] = {"weighting": cfg.weighting, "results": trends}
        report["welch_hk_vs_sh"] = welch
    else:
        run.notes["mie_results"] = "missing; time trends and Welch tests skipped"
    run.stage("mie_tests")
    cost_path = out_dir / "cost_reports.csv"
    if cost_path.exists():
        run.inputs["cost_reports.csv"] = cost_path
        report["mincer_zarnowitz"] = _mz_suite(full, cfg, read_csv(cost_path))
    else:
        run.notes["cost_reports"] = "missing; MZ suite skipped"
    run.stage("mz")

    write_csv(run.out("stationarity_counts.csv"), STATIONARITY_COLUMNS, srows + crows)
    write_json(run.out("stats_report.json"), report)
    run.stage("write")
    run.row_counts.update(stationarity_rows=len(srows) + len(crows), pairs=len(full.pairs()))
    return run.finish()


# --------------------------------------------------------------------------- premium / curves


def cmd_premium(cfg: AnalysisConfig) -> dict:
    run = Run("premium", cfg)
    ds = _restrict(_load(run), cfg)
    series = [premium_series(ds, pid) for pid in ds.pairs()]
    prem_rows = [{"pair_id": p.pair_id, "date": p.date, "hk_price_cny": p.hk_price_cny,
                  "sh_price_cny": p.sh_price_cny, "premium_pct": p.premium_pct, "sign": p.sign}
                 for s in series for p in s.points]
    idx_rows = []
    for exch in ("HK", "SH"):
        universe = [s for s, r in ds.securities.items() if r.exchange == exch and ds.trading_dates(s)]
        if not universe:
            continue
        for ix in (price_index(ds, universe, name=f"price_index_{exch}"),
                   volume_index(ds, universe, name=f"volume_index_{exch}")):
            idx_rows += [{"series": ix.name, "date": d, "value": v} for d, v in zip(ix.dates, ix.values)]
    for agg in daily_premium_aggregates(ds, series):
        for key in ("avg_all", "avg_positive", "avg_negative", "vw_all",
                    "count_positive", "count_negative", "count_zero"):
            idx_rows.append({"series": f"premium_{key}", "date": agg["date"], "value": agg[key]})
    run.stage("compute")
    write_csv(run.out("premium.csv"), PREMIUM_COLUMNS, prem_rows)
    write_csv(run.out("indices.csv"), INDEX_COLUMNS, idx_rows)
    cross = premium_cross_sections(ds, series)
    write_csv(run.out("premium_cross_sections.csv"), CROSS_COLUMNS, cross)
    run.stage("write")
    run.row_counts.update(premium=len(prem_rows), indices=len(idx_rows), pairs=len(cross),
                          dropped_days={s.pair_id: s.dropped_days for s in series})
    return run.finish()


def cmd_curves(cfg: AnalysisConfig) -> dict:
    run = Run("curves", cfg)
    ds = _load(run)
    names = {d: n for n, d in cfg.events().items()}
    rows, missing = [], []
    for sid in sorted(ds.securities):
        for d in cfg.curve_dates():
            if (sid, d) not in ds.bars:
                missing.append({"security_id": sid, "date": d.isoformat()})
                continue
            c = build_volume_curve(ds, sid, d)
            for i, frac in enumerate(c.fractions):
                rows.append({"security_id": sid, "exchange": ds.securities[sid].exchange,
                             "key_date": d, "event": names.get(d, ""), "interval_index": i,
                             "fraction": frac, "shares": c.shares[i] if c.shares else None,
                             "zero_volume": c.zero_volume})
    write_csv(run.out("volume_curves.csv"), CURVE_COLUMNS, rows)
    run.stage("write")
    run.row_counts.update(curve_rows=len(rows), missing_curves=len(missing))
    run.notes["missing_curves"] = missing
    return run.finish()


COMMANDS = {"costs": cmd_costs, "simulate": cmd_simulate, "stats": cmd_stats,
            "premium": cmd_premium, "curves": cmd_curves}


# --------------------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tca", description="Transaction cost analysis for HK/SH dual listings.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="INI analysis configuration")
    p.add_argument("--data-dir", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--exclude-50adv", action="store_true")
    p.add_argument("--weighting", choices=("simple", "notional"))
    p.add_argument("--filter-zero-impact", action="store_true")
    p.add_argument("--out", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), data_dir=args.data_dir, seed=args.seed,
                              exclude_50adv=args.exclude_50adv, weighting=args.weighting,
                              filter_zero_impact=args.filter_zero_impact, out=args.out).validate()
    except ConfigError as exc:
        print(f"tca: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"tca: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"tca: data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # noqa: BLE001 - anything else is a bug, reported as such
        traceback.print_exc()
        return EXIT_INTERNAL
    log.info("%s done in %.2fs", args.command, manifest["timings_seconds"]["total"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
