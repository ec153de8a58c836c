"""Least squares and the regressions built on it: time trends and
Mincer-Zarnowitz forecast evaluation."""
from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from ..errors import InsufficientData, RankDeficient
from .results import DEFAULT_ALPHAS, RegressionResult, TestResult, decisions

# residual sum of squares below this fraction of the data's scale counts as an exact fit
_EXACT_RTOL = 1e-20


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def ols(y, X, names: Optional[Sequence[str]] = None) -> RegressionResult:
    """Ordinary least squares with classical standard errors.

    ``X`` must already contain any intercept column. P-values are two-sided
    from Student's t with ``n - k`` degrees of freedom.
    """
    y = np.asarray(y, dtype=float)
    X = _as_matrix(X)
    n, k = X.shape
    if len(y) != n:
        raise ValueError("y and X have different lengths")
    if n <= k:
        raise InsufficientData(f"need more observations ({n}) than regressors ({k})")
    if np.any(np.all(X == 0, axis=0)) or np.linalg.matrix_rank(X) < k:
        raise RankDeficient("design matrix is not of full column rank")
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(k))

    q, r = np.linalg.qr(X)
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    ssr = float(resid @ resid)
    has_const = bool(np.any(np.all(X == X[0], axis=0)))
    centre = y.mean() if has_const else 0.0
    sst = float(((y - centre) ** 2).sum())
    exact = ssr <= _EXACT_RTOL * max(float(y @ y), 1e-300)
    df = n - k
    s2 = 0.0 if exact else ssr / df
    rinv = np.linalg.inv(r)
    cov_unscaled = rinv @ rinv.T
    bse = np.sqrt(np.diag(cov_unscaled) * s2)
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(bse > 0, beta / np.where(bse > 0, bse, 1.0),
                         np.where(np.abs(beta) > 1e-12, np.sign(beta) * np.inf, 0.0))
    pvals = np.where(np.isfinite(tvals), 2.0 * stats.t.sf(np.abs(tvals), df),
                     0.0)
    rsq = 0.0 if sst == 0 else (1.0 if exact else 1.0 - ssr / sst)
    return RegressionResult(beta, bse, tvals, pvals, rsq, s2, n, df, names, resid,
                            cov_unscaled, exact)


def linear_restriction_test(res: RegressionResult, R, r, name: str = "F") -> TestResult:
    """F test of ``R beta = r``."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    q = R.shape[0]
    diff = R @ res.params - r
    if res.exact_fit:
        hit = bool(np.allclose(diff, 0.0, atol=1e-8 * max(1.0, float(np.abs(r).max()))))
        f, p = (0.0, 1.0) if hit else (np.inf, 0.0)
    else:
        middle = R @ res.cov_unscaled @ R.T
        f = float(diff @ np.linalg.solve(middle, diff) / (q * res.resid_var))
        p = float(stats.f.sf(f, q, res.df_resid))
    return TestResult(name, float(f), p, "two_sided", decisions(p), nobs=(res.nobs,),
                      df=float(res.df_resid), extra={"df_num": q})


def design(*columns, intercept: bool = True) -> np.ndarray:
    cols = [np.asarray(c, dtype=float) for c in columns]
    if intercept:
        cols.insert(0, np.ones(len(cols[0])))
    return np.column_stack(cols)


# --------------------------------------------------------------------------- trend


def aggregate_by_date(dates: Sequence, values, weights=None) -> tuple[list, np.ndarray]:
    """Per-date mean (weighted by ``weights`` when given) in date order."""
    values = np.asarray(values, dtype=float)
    w = None if weights is None else np.asarray(weights, dtype=float)
    groups: dict = {}
    for i, d in enumerate(dates):
        groups.setdefault(d, []).append(i)
    keys = sorted(groups)
    out = np.empty(len(keys))
    for j, d in enumerate(keys):
        idx = groups[d]
        if w is None:
            out[j] = values[idx].mean()
        else:
            ww = w[idx]
            out[j] = (ww * values[idx]).sum() / ww.sum()
    return keys, out


def time_trend(dates: Sequence, values, weights=None) -> RegressionResult:
    """Regress the per-date aggregate on t = 0, 1, 2, ... over sorted dates.

    With ``weights`` (e.g. notional) each date's estimates are combined as a
    weighted average, otherwise as a simple average.
    """
    keys, series = aggregate_by_date(dates, values, weights)
    if len(keys) < 3:
        raise InsufficientData("time trend needs at least 3 dates")
    t = np.arange(len(keys), dtype=float)
    res = ols(series, design(t), names=("const", "trend"))
    return replace(res, extra={"dates": [str(k) for k in keys], "series": series})


# --------------------------------------------------------------------------- MZ


def mincer_zarnowitz(actual, predicted, bands: Sequence[tuple] = (),
                     alphas=DEFAULT_ALPHAS) -> dict:
    """Regress actual on predicted; test intercept 0 and slope 1.

    Returns the regression, the joint F test, the two separate t tests and,
    for each ``(d0, d1)`` in ``bands``, the joint F test of the coefficients
    against the four corners ``(b0 +- d0, b1 +- d1)`` with the smallest
    p-value reported as the band's result.
    """
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape:
        raise ValueError("actual and predicted differ in length")
    if len(actual) < 3:
        raise InsufficientData("MZ regression needs at least 3 observations")
    if np.all(predicted == predicted[0]):
        raise RankDeficient("constant forecast: slope is not identified (uninformative forecast)")
    res = ols(actual, design(predicted), names=("const", "predicted"))
    joint = linear_restriction_test(res, np.eye(2), [0.0, 1.0], name="MZ joint F (b0=0, b1=1)")
    sep = {
        "b0=0": linear_restriction_test(res, [[1.0, 0.0]], [0.0], name="b0=0"),
        "b1=1": linear_restriction_test(res, [[0.0, 1.0]], [1.0], name="b1=1"),
    }
    band_results = []
    for d0, d1 in bands:
        corners = []
        for s0 in (-1.0, 1.0):
            for s1 in (-1.0, 1.0):
                target = [res.params[0] + s0 * d0, res.params[1] + s1 * d1]
                corners.append(linear_restriction_test(res, np.eye(2), target, name="band corner"))
        worst = min(corners, key=lambda c: c.p_value)
        band_results.append({"delta0": d0, "delta1": d1, "min_p": worst.p_value,
                             "statistic": worst.statistic,
                             "reject": {f"{a:g}": bool(worst.p_value < a) for a in alphas}})
    return {"regression": res, "joint": joint, "separate": sep, "bands": band_results}


def dummies_from_labels(labels: Sequence, reference=None, prefix: str = "") -> tuple[np.ndarray, list]:
    """One-hot columns for every level except ``reference`` (default: first sorted level)."""
    levels = sorted(set(labels))
    if reference is None:
        reference = levels[0]
    keep = [lv for lv in levels if lv != reference]
    mat = np.array([[1.0 if x == lv else 0.0 for lv in keep] for x in labels]).reshape(len(labels), len(keep))
    return mat, [f"{prefix}{lv}" for lv in keep]


def mz_with_dummies(actual, predicted, dummies, extras=None) -> RegressionResult:
    """MZ regression augmented with bucket dummies and optional numeric regressors.

    ``dummies`` and ``extras`` are either 2-D arrays or ``{name: column}``
    mappings. The result's ``extra`` holds the plain MZ R-squared and the
    increment the augmentation buys.
    """
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)

    def columns(block, stem):
        if block is None:
            return np.empty((len(actual), 0)), []
        if isinstance(block, Mapping):
            names = list(block)
            return np.column_stack([np.asarray(block[k], dtype=float) for k in names]), names
        mat = _as_matrix(block)
        return mat, [f"{stem}{i}" for i in range(mat.shape[1])]

    d, dnames = columns(dummies, "d")
    e, enames = columns(extras, "x")
    if d.shape[1] and np.any(np.all(d == 0, axis=0)):
        raise RankDeficient("a dummy column is identically zero")
    X = np.column_stack([np.ones(len(actual)), predicted, d, e])
    res = ols(actual, X, names=("const", "predicted", *dnames, *enames))
    base = ols(actual, design(predicted), names=("const", "predicted"))
    return replace(res, extra={"rsquared_mz": base.rsquared,
                               "incremental_rsquared": res.rsquared - base.rsquared})
