from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DEFAULT_ALPHAS = (0.01, 0.05, 0.10)


@dataclass(frozen=True, eq=False)
class RegressionResult:
    """OLS fit. ``params[0]`` is the intercept when the design has one."""

    params: np.ndarray
    bse: np.ndarray
    tvalues: np.ndarray
    pvalues: np.ndarray
    rsquared: float
    resid_var: float
    nobs: int
    df_resid: int
    names: tuple
    resid: np.ndarray
    cov_unscaled: np.ndarray
    exact_fit: bool = False
    extra: dict = field(default_factory=dict)

    def coef(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def to_dict(self) -> dict:
        out = {
            "nobs": self.nobs,
            "df_resid": self.df_resid,
            "rsquared": self.rsquared,
            "resid_var": self.resid_var,
            "exact_fit": self.exact_fit,
            "coefficients": {
                n: {"coef": float(c), "se": float(s), "t": float(t), "p": float(p)}
                for n, c, s, t, p in zip(self.names, self.params, self.bse, self.tvalues, self.pvalues)
            },
        }
        out.update({k: v for k, v in self.extra.items() if not isinstance(v, np.ndarray)})
        return out


@dataclass(frozen=True)
class TestResult:
    """Outcome of a hypothesis test. ``decision_at[alpha]`` is True when the
    null is rejected at that level."""

    name: str
    statistic: float
    p_value: float
    alternative: str = "two_sided"
    decision_at: dict = field(default_factory=dict)
    nobs: tuple = ()
    means: tuple = ()
    variances: tuple = ()
    df: Optional[float] = None
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def reject(self, alpha: float = 0.05) -> bool:
        if alpha in self.decision_at:
            return self.decision_at[alpha]
        return self.p_value < alpha

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alternative": self.alternative,
            "reject": {f"{a:g}": bool(v) for a, v in sorted(self.decision_at.items())},
            "degenerate": self.degenerate,
        }
        if self.nobs:
            out["nobs"] = list(self.nobs)
        if self.means:
            out["means"] = list(self.means)
        if self.variances:
            out["variances"] = list(self.variances)
        if self.df is not None:
            out["df"] = self.df
        out.update(self.extra)
        return out


def decisions(p_value: float, alphas=DEFAULT_ALPHAS) -> dict:
    return {a: bool(p_value < a) for a in alphas}
