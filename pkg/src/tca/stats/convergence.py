"""Price-convergence battery for dual-listed pairs.

A pair converges when its price gap has no unit root. Seven gap series
are tested, HK leg first:

1-3. HK-minus-SH price difference in CNY: all days, days above zero, days below zero
4-6. the same difference as a percent of the SH price: all, above, below zero
7.   residual of the no-intercept regression ``hk = beta * sh + e``

Each series gets ADF, KPSS and PP; the combination's verdict is the
majority reading of the three. The pair's headline verdict is combination 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import InsufficientOverlap
from .regression import design, ols
from .results import TestResult
from .unitroot import MIN_OBS, adf_test, indicates_stationary, kpss_test, pp_test

COMBINATIONS = (
    "cny_diff_all",
    "cny_diff_pos",
    "cny_diff_neg",
    "pct_diff_all",
    "pct_diff_pos",
    "pct_diff_neg",
    "spread_residual",
)


@dataclass(frozen=True)
class CombinationResult:
    combination: str
    nobs: int
    tests: Mapping[str, TestResult] = field(default_factory=dict)
    converges: Optional[bool] = None  # None: too short to test

    def to_dict(self) -> dict:
        return {"nobs": self.nobs, "converges": self.converges,
                "tests": {k: v.to_dict() for k, v in self.tests.items()}}


@dataclass(frozen=True)
class ConvergenceReport:
    pair_id: str
    nobs: int
    combinations: Mapping[str, CombinationResult]
    spread_beta: float

    @property
    def converges(self) -> Optional[bool]:
        return self.combinations["cny_diff_all"].converges

    def to_dict(self) -> dict:
        return {"pair_id": self.pair_id, "nobs": self.nobs, "converges": self.converges,
                "spread_beta": self.spread_beta,
                "combinations": {k: v.to_dict() for k, v in self.combinations.items()}}


def stationarity_trio(series, alpha: float = 0.05) -> tuple[dict, bool]:
    tests = {"ADF": adf_test(series), "KPSS": kpss_test(series), "PP": pp_test(series)}
    votes = sum(indicates_stationary(t, alpha) for t in tests.values())
    return tests, votes >= 2


def _combo(name: str, x: np.ndarray, alpha: float) -> CombinationResult:
    if len(x) < MIN_OBS:
        return CombinationResult(name, len(x))
    tests, ok = stationarity_trio(x, alpha)
    return CombinationResult(name, len(x), tests, ok)


def convergence_battery(hk_price_hkd, sh_price_cny, hkd_per_cny, pair_id: str = "",
                        alpha: float = 0.05, spread_intercept: bool = False) -> ConvergenceReport:
    """Run the seven-series battery on date-aligned HK (HKD) and SH (CNY) prices."""
    hk = np.asarray(hk_price_hkd, dtype=float) / np.asarray(hkd_per_cny, dtype=float)
    sh = np.asarray(sh_price_cny, dtype=float)
    if hk.shape != sh.shape:
        raise ValueError("price series are not aligned")
    if len(sh) < MIN_OBS:
        raise InsufficientOverlap(f"pair {pair_id}: {len(sh)} overlapping observations, need {MIN_OBS}")
    diff = hk - sh
    pct = 100.0 * diff / sh
    if spread_intercept:
        fit = ols(hk, design(sh), names=("const", "beta"))
        beta = fit.coef("beta")
    else:
        fit = ols(hk, sh[:, None], names=("beta",))
        beta = fit.coef("beta")
    series = {
        "cny_diff_all": diff,
        "cny_diff_pos": diff[diff > 0],
        "cny_diff_neg": diff[diff < 0],
        "pct_diff_all": pct,
        "pct_diff_pos": pct[diff > 0],
        "pct_diff_neg": pct[diff < 0],
        "spread_residual": fit.resid,
    }
    combos = {k: _combo(k, series[k], alpha) for k in COMBINATIONS}
    return ConvergenceReport(pair_id, len(sh), combos, beta)


def convergence_counts(reports: Sequence[ConvergenceReport], alpha: float = 0.05) -> list[dict]:
    """Per-combination counts over many pairs (the summary-table shape).

    Sign flips mean the positive and negative subsets need not add up to the
    full-sample count; nothing here enforces that they do.
    """
    rows = []
    for name in COMBINATIONS:
        tested = [r.combinations[name] for r in reports if r.combinations[name].converges is not None]
        rows.append({
            "combination": name,
            "pairs": len(reports),
            "tested": len(tested),
            "adf_stationary": sum(indicates_stationary(c.tests["ADF"], alpha) for c in tested),
            "kpss_stationary": sum(indicates_stationary(c.tests["KPSS"], alpha) for c in tested),
            "pp_stationary": sum(indicates_stationary(c.tests["PP"], alpha) for c in tested),
            "converging": sum(bool(c.converges) for c in tested),
        })
    return rows


def stationarity_counts(series_by_id: Mapping[str, Sequence[float]], alpha: float = 0.05) -> dict:
    """How many series each test reads as stationary."""
    out = {"series": 0, "tested": 0, "adf_stationary": 0, "kpss_stationary": 0, "pp_stationary": 0}
    for sid in sorted(series_by_id):
        out["series"] += 1
        x = np.asarray(series_by_id[sid], dtype=float)
        if len(x) < MIN_OBS:
            continue
        tests, _ = stationarity_trio(x, alpha)
        out["tested"] += 1
        out["adf_stationary"] += indicates_stationary(tests["ADF"], alpha)
        out["kpss_stationary"] += indicates_stationary(tests["KPSS"], alpha)
        out["pp_stationary"] += indicates_stationary(tests["PP"], alpha)
    return out
