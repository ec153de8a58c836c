"""Analysis configuration.

A run is described by one INI file (``key = value`` under sections) whose
values the command-line flags may override. Relative paths resolve against
the config file's directory.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Optional

from .errors import TCAError

EVENT_PRESETS = {
    "connect2014": {
        "start_of_year": date(2014, 1, 10),
        "announcement": date(2014, 4, 10),
        "expected_launch": date(2014, 10, 27),
        "launch": date(2014, 11, 17),
    },
}

WEIGHTINGS = ("simple", "notional")


class ConfigError(TCAError):
    pass


@dataclass(frozen=True)
class MieTemplate:
    sides: tuple = ("BUY", "SELL")
    demands_pct_adv: tuple = (5.0, 25.0, 60.0)
    start_interval: int = 0
    end_interval: Optional[int] = None
    lookback_days: int = 10
    num_paths: int = 100
    order_paths: int = 100
    formulation: str = "complex"
    clip_fraction: float = 0.01
    start: Optional[date] = None
    end: Optional[date] = None


@dataclass(frozen=True)
class AnalysisConfig:
    data_dir: Optional[Path] = None
    bar_minutes: int = 30
    start: Optional[date] = None
    end: Optional[date] = None
    event_preset: str = "connect2014"
    subsample_event: str = "launch"
    subsample_months: int = 2
    key_dates: tuple = ()
    exclude_50plus_adv: bool = False
    weighting: str = "simple"
    filter_zero_impact: bool = False
    allow_partial: bool = False
    mi_formulation: str = "complex"
    adv_window: int = 20
    profile_window: int = 60
    half_spread_bps: float = 5.0
    mz_bands: tuple = ((0.5, 0.05),)
    spread_intercept: bool = False
    alpha: float = 0.05
    mie: MieTemplate = field(default_factory=MieTemplate)
    output_dir: Path = Path("out")
    seed: int = 0
    source: Optional[Path] = None

    def events(self) -> dict:
        try:
            return EVENT_PRESETS[self.event_preset]
        except KeyError:
            raise ConfigError(f"unknown event preset {self.event_preset!r}") from None

    def curve_dates(self) -> tuple:
        return self.key_dates or tuple(self.events().values())

    def subsample_window(self) -> tuple[date, date]:
        """``subsample_months`` before the configured event, inclusive of it."""
        end = self.events()[self.subsample_event]
        month = end.month - self.subsample_months
        year = end.year + (month - 1) // 12
        month = (month - 1) % 12 + 1
        day = min(end.day, 28)
        return date(year, month, day), end

    def in_range(self, d: date) -> bool:
        return (self.start is None or d >= self.start) and (self.end is None or d <= self.end)

    def echo(self) -> dict:
        out = asdict(self)
        out["mie"] = asdict(self.mie)
        return out

    def validate(self) -> "AnalysisConfig":
        if self.start and self.end and self.start > self.end:
            raise ConfigError("start date after end date")
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"weighting must be one of {WEIGHTINGS}")
        if self.mi_formulation not in ("simple", "complex"):
            raise ConfigError("mi_formulation must be simple or complex")
        self.events()
        if self.subsample_event not in self.events():
            raise ConfigError(f"unknown event {self.subsample_event!r}")
        out = Path(self.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory {out} is not writable")
        return self


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _date(s: str) -> Optional[date]:
    s = s.strip()
    return date.fromisoformat(s) if s else None


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(",", " ").split())


def _opt_int(s: str) -> Optional[int]:
    s = s.strip()
    return int(s) if s else None


def load_config(path: Optional[Path] = None) -> AnalysisConfig:
    if path is None:
        return AnalysisConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read(path, encoding="utf-8")
    base = path.parent
    kw: dict = {"source": path}
    mie: dict = {}
    try:
        if cp.has_section("data"):
            s = cp["data"]
            if s.get("dir"):
                kw["data_dir"] = base / s.get("dir")
            if "bar_minutes" in s:
                kw["bar_minutes"] = s.getint("bar_minutes")
        if cp.has_section("analysis"):
            s = cp["analysis"]
            for key in ("start", "end"):
                if key in s:
                    kw[key] = _date(s[key])
            for key in ("event_preset", "subsample_event", "weighting", "mi_formulation"):
                if key in s:
                    kw[key] = s[key].strip()
            for key in ("exclude_50plus_adv", "filter_zero_impact", "allow_partial", "spread_intercept"):
                if key in s:
                    kw[key] = _bool(s[key])
            for key in ("adv_window", "profile_window", "subsample_months"):
                if key in s:
                    kw[key] = s.getint(key)
            for key in ("half_spread_bps", "alpha"):
                if key in s:
                    kw[key] = s.getfloat(key)
            if "key_dates" in s:
                kw["key_dates"] = tuple(_date(x) for x in s["key_dates"].replace(",", " ").split())
            if "mz_bands" in s:
                bands = []
                for item in s["mz_bands"].replace(",", " ").split():
                    d0, d1 = item.split(":")
                    bands.append((float(d0), float(d1)))
                kw["mz_bands"] = tuple(bands)
        if cp.has_section("mie"):
            s = cp["mie"]
            if "sides" in s:
                mie["sides"] = tuple(x.strip().upper() for x in s["sides"].split(",") if x.strip())
            if "demands" in s:
                mie["demands_pct_adv"] = _floats(s["demands"])
            for key in ("start_interval", "lookback_days", "num_paths", "order_paths"):
                if key in s:
                    mie[key] = s.getint(key)
            if "end_interval" in s:
                mie["end_interval"] = _opt_int(s["end_interval"])
            if "formulation" in s:
                mie["formulation"] = s["formulation"].strip()
            if "clip_fraction" in s:
                mie["clip_fraction"] = s.getfloat("clip_fraction")
            for key in ("start", "end"):
                if key in s:
                    mie[key] = _date(s[key])
        if cp.has_section("output") and cp["output"].get("dir"):
            kw["output_dir"] = base / cp["output"]["dir"]
        if cp.has_section("run") and "seed" in cp["run"]:
            kw["seed"] = cp["run"].getint("seed")
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if mie:
        kw["mie"] = MieTemplate(**mie)
    return AnalysisConfig(**kw)


def apply_overrides(cfg: AnalysisConfig, *, data_dir=None, seed=None, exclude_50adv=None,
                    weighting=None, filter_zero_impact=None, out=None) -> AnalysisConfig:
    changes: dict = {}
    if data_dir is not None:
        changes["data_dir"] = Path(data_dir)
    elif cfg.data_dir is None and os.environ.get("TCA_DATA_DIR"):
        changes["data_dir"] = Path(os.environ["TCA_DATA_DIR"])
    if seed is not None:
        changes["seed"] = int(seed)
    if exclude_50adv:
        changes["exclude_50plus_adv"] = True
    if weighting is not None:
        changes["weighting"] = weighting
    if filter_zero_impact:
        changes["filter_zero_impact"] = True
    if out is not None:
        changes["output_dir"] = Path(out)
    return replace(cfg, **changes)


def default_subsample(end: date, months: int = 2) -> date:
    return end - timedelta(days=30 * months)
