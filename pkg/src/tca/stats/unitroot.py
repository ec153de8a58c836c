"""Unit-root and stationarity tests: ADF, Phillips-Perron and KPSS.

ADF and PP test the null of a unit root (rejection suggests stationarity);
KPSS tests the null of level or trend stationarity (rejection suggests a
unit root). Tau p-values use MacKinnon's (1994) response surfaces and KPSS
p-values interpolate the original critical-value table; both tables ship
as JSON under ``data/``.
"""
from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.stats import norm

from ..errors import InsufficientData
from .results import DEFAULT_ALPHAS, TestResult, decisions

MIN_OBS = 20
TRENDS = ("n", "c", "ct")


@lru_cache(maxsize=None)
def _table(name: str) -> dict:
    return json.loads(resources.files("tca.stats").joinpath("data", name).read_text())


def mackinnon_p(stat: float, trend: str = "c") -> float:
    """Asymptotic p-value of a Dickey-Fuller tau statistic."""
    tab = _table("mackinnon_tau.json")
    tau_max = tab["tau_max"][trend]
    if tau_max is not None and stat > tau_max:
        return 1.0
    if stat < tab["tau_min"][trend]:
        return 0.0
    coefs = tab["smallp"][trend] if stat <= tab["tau_star"][trend] else tab["largep"][trend]
    return float(norm.cdf(np.polynomial.polynomial.polyval(stat, coefs)))


def schwert_maxlag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _deterministic(n: int, trend: str) -> np.ndarray:
    if trend == "n":
        return np.empty((n, 0))
    if trend == "c":
        return np.ones((n, 1))
    if trend == "ct":
        return np.column_stack([np.ones(n), np.arange(1, n + 1, dtype=float)])
    raise ValueError(f"trend must be one of {TRENDS}")


def _fit(y: np.ndarray, X: np.ndarray):
    """Light OLS: coefficients, residuals, and coefficient standard errors."""
    q, r = np.linalg.qr(X)
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    n, k = X.shape
    s2 = resid @ resid / (n - k)
    rinv = np.linalg.inv(r)
    se = np.sqrt(np.einsum("ij,ij->i", rinv, rinv) * s2)
    return beta, resid, se


def _prepare(series) -> np.ndarray:
    y = np.asarray(series, dtype=float)
    if y.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if len(y) < MIN_OBS:
        raise InsufficientData(f"need at least {MIN_OBS} observations, got {len(y)}")
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    return y


def _is_degenerate(y: np.ndarray) -> bool:
    return bool(np.ptp(y) <= 1e-12 * max(1.0, float(np.abs(y).max())))


def _degenerate_result(name: str, y: np.ndarray, null_is_unit_root: bool) -> TestResult:
    # constant series: no stochastic variation, treated as trivially stationary
    if null_is_unit_root:
        return TestResult(name, -math.inf, 0.0, "less", decisions(0.0), nobs=(len(y),),
                          degenerate=True)
    return TestResult(name, 0.0, 1.0, "greater", decisions(1.0), nobs=(len(y),), degenerate=True)


def _adf_design(y: np.ndarray, lags: int, start: int, trend: str):
    dy = np.diff(y)
    rows = np.arange(start, len(dy))
    cols = [y[rows]]  # y_{t-1} aligned with dy_t, since dy[t] = y[t+1] - y[t]
    cols += [dy[rows - j] for j in range(1, lags + 1)]
    X = np.column_stack(cols + [_deterministic(len(rows), trend)])
    return dy[rows], X


def adf_test(series, max_lag: int | None = None, autolag: str | None = "aic", trend: str = "c",
             alphas=DEFAULT_ALPHAS) -> TestResult:
    """Augmented Dickey-Fuller test.

    ``dy_t = a + g*y_{t-1} + sum_j phi_j dy_{t-j} + e_t``; the statistic is
    the t-ratio of ``g``. With ``autolag="aic"`` the lag order is picked by
    AIC over 0..max_lag on a common sample (``max_lag`` defaults to the
    Schwert bound ``12 (n/100)^(1/4)``), then refit on the full sample.
    """
    y = _prepare(series)
    if _is_degenerate(y):
        return _degenerate_result("ADF", y, True)
    n = len(y)
    maxlag = schwert_maxlag(n) if max_lag is None else int(max_lag)
    maxlag = max(0, min(maxlag, n // 2 - len(trend) - 2))
    if autolag is None:
        lags = maxlag
    elif autolag.lower() == "aic":
        best = None
        for p in range(maxlag + 1):
            dep, X = _adf_design(y, p, maxlag, trend)
            beta, resid, _ = _fit(dep, X)
            m = len(dep)
            aic = m * math.log(resid @ resid / m) + 2 * X.shape[1]
            if best is None or aic < best[0]:
                best = (aic, p)
        lags = best[1]
    else:
        raise ValueError("autolag must be 'aic' or None")
    dep, X = _adf_design(y, lags, lags, trend)
    beta, _, se = _fit(dep, X)
    stat = float(beta[0] / se[0])
    p = mackinnon_p(stat, trend)
    return TestResult("ADF", stat, p, "less", decisions(p, alphas), nobs=(len(dep),),
                      extra={"lags": lags, "trend": trend})


def newey_west_variance(u: np.ndarray, lags: int) -> float:
    """Bartlett-kernel long-run variance of ``u`` (no demeaning)."""
    n = len(u)
    total = u @ u / n
    for j in range(1, lags + 1):
        total += 2.0 * (1.0 - j / (lags + 1.0)) * (u[j:] @ u[:-j]) / n
    return float(total)


def pp_test(series, lags: int | None = None, trend: str = "c", alphas=DEFAULT_ALPHAS) -> TestResult:
    """Phillips-Perron Z-tau test.

    Fits ``y_t = a + rho*y_{t-1} + u_t`` and corrects the t-ratio of
    ``rho - 1`` for serial correlation with a Newey-West long-run variance
    (``lags`` defaults to ``ceil(12 (n/100)^(1/4))``).
    """
    y = _prepare(series)
    if _is_degenerate(y):
        return _degenerate_result("PP", y, True)
    n_all = len(y)
    if lags is None:
        lags = int(math.ceil(12.0 * (n_all / 100.0) ** 0.25))
    dep = y[1:]
    X = np.column_stack([y[:-1], _deterministic(n_all - 1, trend)])
    beta, u, se = _fit(dep, X)
    n, k = X.shape
    lam2 = newey_west_variance(u, lags)
    s2 = u @ u / (n - k)
    gamma0 = u @ u / n
    sigma = se[0]
    if not lam2 > 0 or not sigma > 0:
        return _degenerate_result("PP", y, True)
    stat = float(math.sqrt(gamma0 / lam2) * ((beta[0] - 1.0) / sigma)
                 - 0.5 * ((lam2 - gamma0) / math.sqrt(lam2)) * (n * sigma / math.sqrt(s2)))
    p = mackinnon_p(stat, trend)
    return TestResult("PP", stat, p, "less", decisions(p, alphas), nobs=(n,),
                      extra={"lags": lags, "trend": trend})


def _kpss_bandwidth(u: np.ndarray) -> int:
    # Hobijn, Franses & Ooms (1998) automatic bandwidth for the Bartlett kernel
    n = len(u)
    covlags = int(n ** (2.0 / 9.0))
    s0 = u @ u / n
    s1 = 0.0
    for i in range(1, covlags + 1):
        prod = (u[i:] @ u[: n - i]) / (n / 2.0)
        s0 += prod
        s1 += i * prod
    if s0 <= 0:
        return 0
    gamma = 1.1447 * ((s1 / s0) ** 2) ** (1.0 / 3.0)
    return int(min(n, int(gamma * n ** (1.0 / 3.0))))


def kpss_test(series, null: str = "level", lags: int | None = None,
              alphas=DEFAULT_ALPHAS) -> TestResult:
    """KPSS test of level (``null="level"``) or trend stationarity.

    The p-value is interpolated in the published table and therefore
    bounded to [0.01, 0.10]; decisions at the tabulated levels compare the
    statistic with the critical value directly.
    """
    if null not in ("level", "trend"):
        raise ValueError("null must be 'level' or 'trend'")
    y = _prepare(series)
    if _is_degenerate(y):
        return _degenerate_result("KPSS", y, False)
    n = len(y)
    X = _deterministic(n, "c" if null == "level" else "ct")
    _, u, _ = _fit(y, X)
    if lags is None:
        lags = _kpss_bandwidth(u)
    lam = newey_west_variance(u, lags)
    if not lam > 0:
        return _degenerate_result("KPSS", y, False)
    s = np.cumsum(u)
    stat = float((s @ s) / (n * n) / lam)
    tab = _table("kpss_critical.json")
    crit = np.asarray(tab[null])
    pv = np.asarray(tab["pvalues"])
    p = float(np.interp(stat, crit, pv))
    table_levels = dict(zip(tab["pvalues"], tab[null]))
    dec = {}
    for a in alphas:
        dec[a] = bool(stat > table_levels[a]) if a in table_levels else bool(p < a)
    return TestResult("KPSS", stat, p, "greater", dec, nobs=(n,),
                      extra={"lags": lags, "null": null, "p_bounded": bool(stat < crit[0] or stat > crit[-1])})


def indicates_stationary(result: TestResult, alpha: float = 0.05) -> bool:
    """Stationarity reading of a test: ADF/PP reject, or KPSS fails to reject."""
    if result.name == "KPSS":
        return not result.reject(alpha)
    return result.reject(alpha)
