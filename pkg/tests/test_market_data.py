import shutil
from datetime import date, datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import SMALL, flat_day, make_dataset
from tca.errors import DataError, DuplicateKey, MalformedRow, NoData, UnknownReference
from tca.market_data import (
    average_daily_volume,
    build_volume_curve,
    interval_of,
    interval_start,
    load_dataset,
    session_length,
    trailing_profile,
)

D1, D2 = date(2014, 11, 14), date(2014, 11, 17)


def copy_small(tmp_path):
    dst = tmp_path / "data"
    shutil.copytree(SMALL, dst)
    return dst


def append_line(path, line):
    with open(path, "a") as fh:
        fh.write(line + "\n")


class TestSessions:
    def test_lengths(self):
        assert session_length("HK") == 11
        assert session_length("SH") == 8

    @pytest.mark.parametrize("exch,ts,slot", [
        ("HK", datetime(2014, 11, 17, 9, 30), 0),
        ("HK", datetime(2014, 11, 17, 11, 59), 4),
        ("HK", datetime(2014, 11, 17, 13, 0), 5),
        ("HK", datetime(2014, 11, 17, 15, 59), 10),
        ("SH", datetime(2014, 11, 17, 11, 29), 3),
        ("SH", datetime(2014, 11, 17, 13, 0), 4),
        ("SH", datetime(2014, 11, 17, 14, 45), 7),
    ])
    def test_interval_of(self, exch, ts, slot):
        assert interval_of(exch, ts) == slot

    @pytest.mark.parametrize("exch", ["HK", "SH"])
    def test_start_round_trip(self, exch):
        for j in range(session_length(exch)):
            assert interval_of(exch, interval_start(exch, D2, j)) == j


class TestLoad:
    def test_small_counts(self, small):
        assert small.row_counts["securities"] == 3
        assert small.row_counts["bars"] == 60
        assert small.row_counts["orders"] == 5
        assert small.row_counts["fills"] == 10
        assert small.pairs() == {"X1": ("HKA", "SHA")}

    def test_sh_ticks_derived(self, small):
        bars = small.day_bars("SHA", D1)
        assert all(b.ticks_derived for b in bars)
        # every bar closes above its predecessor, so each shows one uptick
        assert [(b.upticks, b.downticks) for b in bars] == [(1, 0)] * 8

    def test_hk_ticks_kept(self, small):
        b = small.day_bars("HKA", D1)[0]
        assert (b.upticks, b.downticks, b.ticks_derived) == (3, 1, False)

    def test_missing_required_file(self, tmp_path):
        d = copy_small(tmp_path)
        (d / "bars.csv").unlink()
        with pytest.raises(DataError):
            load_dataset(d)

    def test_optional_files(self, tmp_path):
        d = copy_small(tmp_path)
        for name in ("orders", "fills", "fx"):
            (d / f"{name}.csv").unlink()
        ds = load_dataset(d)
        assert len(ds.orders) == 0 and len(ds.fx) == 0

    def test_unknown_security(self, tmp_path):
        d = copy_small(tmp_path)
        append_line(d / "bars.csv", "ZZZ,2014-11-17,0,1,1,1,1,10,,")
        with pytest.raises(UnknownReference):
            load_dataset(d)

    def test_duplicate_bar(self, tmp_path):
        d = copy_small(tmp_path)
        append_line(d / "bars.csv", "HKA,2014-11-17,0,11.0,11.15,10.95,11.1,1000,3,1")
        with pytest.raises(DuplicateKey):
            load_dataset(d)

    def test_bad_ohlc(self, tmp_path):
        d = copy_small(tmp_path)
        append_line(d / "bars.csv", "HKB,2014-11-18,0,2.0,1.9,1.8,1.85,10,,")
        with pytest.raises(MalformedRow):
            load_dataset(d)

    def test_slot_outside_session(self, tmp_path):
        d = copy_small(tmp_path)
        append_line(d / "bars.csv", "SHA,2014-11-18,8,9,9,9,9,10,,")
        with pytest.raises(MalformedRow):
            load_dataset(d)

    def test_bad_currency(self, tmp_path):
        d = copy_small(tmp_path)
        append_line(d / "securities.csv", "HKC,HK,CNY,1e9,Energy,")
        with pytest.raises(MalformedRow):
            load_dataset(d)

    def test_overfill(self, tmp_path):
        d = copy_small(tmp_path)
        append_line(d / "fills.csv", "O4,2014-11-17T14:20:00,1,3.0")
        with pytest.raises(MalformedRow):
            load_dataset(d)

    def test_orphan_pair(self, tmp_path):
        d = copy_small(tmp_path)
        append_line(d / "securities.csv", "HKC,HK,HKD,1e9,Energy,X9")
        with pytest.raises(UnknownReference):
            load_dataset(d)

    def test_schema_version(self):
        with pytest.raises(DataError):
            load_dataset(SMALL, schema_version="2")

    def test_fine_bars_aggregate(self, tmp_path):
        d = tmp_path / "fine"
        d.mkdir()
        shutil.copy(SMALL / "securities.csv", d)
        lines = ["security_id,date,interval_index,open,high,low,close,volume,upticks,downticks"]
        # six 5-minute bars make slot 0, six more slot 1
        for i in range(12):
            p = 10 + 0.01 * i
            lines.append(f"HKB,2014-11-17,{i},{p:.2f},{p + 0.05:.2f},{p - 0.05:.2f},{p + 0.01:.2f},{100 * (i + 1)},1,0")
        (d / "bars.csv").write_text("\n".join(lines) + "\n")
        ds = load_dataset(d, bar_minutes=5)
        bars = ds.day_bars("HKB", D2)
        assert len(bars) == 2
        assert bars[0].open == 10.0 and bars[0].close == 10.06
        assert bars[0].volume == sum(100 * (i + 1) for i in range(6))
        assert bars[1].high == pytest.approx(11 * 0.01 + 10.05)
        assert bars[0].upticks == 6


class TestCurves:
    def test_curve_fractions(self, small):
        c = build_volume_curve(small, "HKA", D1)
        expect = np.arange(1, 12) / 66.0
        assert_allclose(c.fractions, expect, rtol=1e-15)
        assert sum(c.shares) == 66000

    def test_profile_excludes_as_of(self, small):
        prof = trailing_profile(small, "SHA", D2)
        assert prof.days_used == 1
        assert_allclose(prof.fractions, np.arange(1, 9) / 36.0)
        with pytest.raises(NoData):
            trailing_profile(small, "SHA", D1)

    def test_adv(self, small):
        assert average_daily_volume(small, "HKA", D2) == 66000.0
        with pytest.raises(NoData):
            average_daily_volume(small, "HKA", D1)

    def test_zero_volume_day_flagged_and_skipped(self):
        days = [date(2014, 11, d) for d in (10, 11, 12, 13)]
        bars = {("S", days[0]): flat_day(8, 5.0, 100), ("S", days[1]): flat_day(8, 5.0, 0),
                ("S", days[2]): [(5, 5, 5, 5, 100 * (j + 1)) for j in range(8)], ("S", days[3]): flat_day(8, 5.0, 7)}
        ds = make_dataset([("S", "SH", 1e9, "X", None)], bars)
        assert build_volume_curve(ds, "S", days[1]).zero_volume
        assert sum(build_volume_curve(ds, "S", days[1]).fractions) == 0
        prof = trailing_profile(ds, "S", days[3])
        assert prof.days_used == 2
        expect = (np.full(8, 1 / 8) + np.arange(1, 9) / 36.0) / 2
        assert_allclose(prof.fractions, expect, rtol=1e-14)

    def test_identical_days_reproduce_exactly(self):
        # fractions that do not survive averaging in floating point
        shape = [3, 7, 11, 13, 17, 19, 23, 29]
        days = [date(2014, 10, d) for d in range(1, 23)]
        bars = {("S", d): [(5, 5, 5, 5, v) for v in shape] for d in days}
        ds = make_dataset([("S", "SH", 1e9, "X", None)], bars)
        prof = trailing_profile(ds, "S", days[-1])
        assert prof.fractions == build_volume_curve(ds, "S", days[0]).fractions

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 10**7), min_size=8, max_size=8).filter(lambda v: sum(v) > 0))
    def test_fractions_sum_to_one(self, vols):
        ds = make_dataset([("S", "SH", 1e9, "X", None)], {("S", D2): [(5, 5, 5, 5, v) for v in vols]})
        c = build_volume_curve(ds, "S", D2)
        assert abs(sum(c.fractions) - 1.0) < 1e-12
        assert min(c.fractions) >= 0
