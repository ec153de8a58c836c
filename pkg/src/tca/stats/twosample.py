"""Welch's unequal-variance t test."""
from __future__ import annotations

import math
from fractions import Fraction

from scipy import stats

from ..errors import DegenerateVariance, InsufficientData
from .results import DEFAULT_ALPHAS, TestResult

ALTERNATIVES = ("two_sided", "less", "greater")


def _moments(xs) -> tuple[int, Fraction, Fraction]:
    vals = [Fraction(float(x)) for x in xs]
    n = len(vals)
    mean = sum(vals, Fraction(0)) / n
    var = sum(((v - mean) ** 2 for v in vals), Fraction(0)) / (n - 1)
    return n, mean, var


def welch_t(a, b, alternative: str = "two_sided", alphas=DEFAULT_ALPHAS) -> TestResult:
    """t = (mean_a - mean_b) / sqrt(var_a/n_a + var_b/n_b) with
    Welch-Satterthwaite degrees of freedom.

    Moments are accumulated exactly (rationals) so the statistic is
    bit-identical under shifting or positive scaling of both samples
    whenever the shifted/scaled inputs are themselves exact.
    ``alternative="less"`` tests mean_a < mean_b.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    a, b = list(a), list(b)
    if len(a) < 2 or len(b) < 2:
        raise InsufficientData("each sample needs at least 2 observations")
    na, ma, va = _moments(a)
    nb, mb, vb = _moments(b)
    qa, qb = va / na, vb / nb
    se2 = qa + qb
    if se2 == 0:
        raise DegenerateVariance("both samples have zero variance")
    diff = ma - mb
    t2 = diff * diff / se2
    t = math.copysign(math.sqrt(float(t2)), float(diff)) if diff else 0.0
    df = float(se2 * se2 / (qa * qa / (na - 1) + qb * qb / (nb - 1)))
    if alternative == "two_sided":
        p = 1.0 if t == 0 else float(2.0 * stats.t.sf(abs(t), df))
    elif alternative == "less":
        p = float(stats.t.cdf(t, df))
    else:
        p = float(stats.t.sf(t, df))
    p = min(max(p, 0.0), 1.0)
    return TestResult(
        name="Welch t",
        statistic=t,
        p_value=p,
        alternative=alternative,
        decision_at={al: bool(p < al) for al in alphas},
        nobs=(na, nb),
        means=(float(ma), float(mb)),
        variances=(float(va), float(vb)),
        df=df,
    )
