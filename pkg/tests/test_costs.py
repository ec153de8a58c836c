import math
from datetime import date, datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import flat_day, make_dataset, make_order
from tca.costs import (
    COST_COLUMNS,
    adv_band,
    auxiliary_metrics,
    cap_band,
    classify_buckets,
    cost_report,
    decompose,
    implementation_shortfall,
    market_impact_complex,
    market_impact_simple,
    market_timing,
    momentum_band,
    report_row,
    spread_metrics,
    vem_band,
    volatility_band,
    vwet,
)
from tca.errors import EmptyFills, PartialFill, ZeroDuration
from tca.market_data import Fill, OrderRecord


def oracle(p0, prices, shares, side=1):
    """Brute-force IS / MI from the raw sums, in plain floats."""
    total = sum(shares)
    is_ = side * (sum(s * p for s, p in zip(shares, prices)) - total * p0)
    prev, w = p0, total
    mi_s = mi_c = 0.0
    for s, p in zip(shares, prices):
        d = side * (p - prev)
        mi_s += max(d, 0.0) * s
        mi_c += max(d, 0.0) * w
        w -= s
        prev = p
    return is_, mi_s, mi_c


class TestWorkedCases:
    def test_monotone_rise(self):
        order, fills = make_order([101, 102, 103], [100, 100, 100], arrival=100)
        assert implementation_shortfall(order, fills).currency == 600
        assert market_impact_complex(order, fills).currency == 600
        assert market_timing(order, fills, "complex") == 0.0
        # simple kernel: MT telescopes to S2(P1-P0) + S3(P2-P0) = 100 + 200
        assert market_impact_simple(order, fills).currency == 300
        d = decompose(order, fills)
        assert d.mt_currency["simple"] == 300

    def test_dip(self):
        order, fills = make_order([101, 100, 102], [100, 100, 100], arrival=100)
        d = decompose(order, fills)
        assert d.is_currency == 300
        assert d.mi_currency["simple"] == 300
        assert d.mi_currency["complex"] == 500
        assert d.mt_currency["complex"] == -200
        # only the second move is a dip: W_2 (P_2 - P_1) = 200 * -1
        assert d.mt_currency["complex"] == 200 * (100 - 101)

    def test_bps_denominator(self):
        order, fills = make_order([101, 102, 103], [100, 100, 100], arrival=100)
        # 600 over an arrival notional of 30,000
        assert implementation_shortfall(order, fills).bps == 200.0

    def test_all_at_arrival(self):
        order, fills = make_order([50, 50, 50], [10, 20, 30], arrival=50)
        d = decompose(order, fills)
        assert d.is_bps == d.mi_bps["simple"] == d.mi_bps["complex"] == d.mt_bps["complex"] == 0.0

    def test_falling_buy_has_no_impact(self):
        order, fills = make_order([99, 98, 97], [1, 1, 1], arrival=100)
        d = decompose(order, fills)
        assert d.mi_currency == {"simple": 0.0, "complex": 0.0}
        assert d.is_currency == -6

    def test_single_fill_kernels_agree(self):
        order, fills = make_order([10.5], [700], arrival=10)
        d = decompose(order, fills)
        assert d.mi_bps["simple"] == d.mi_bps["complex"]

    def test_sell_mirror(self):
        buy, bf = make_order([101, 100, 102], [100, 100, 100], arrival=100)
        sell, sf = make_order([99, 100, 98], [100, 100, 100], side="SELL", arrival=100)
        assert decompose(buy, bf) == decompose(sell, sf)


class TestErrors:
    def test_empty(self):
        order, _ = make_order([1.0], [1])
        with pytest.raises(EmptyFills):
            decompose(order, ())

    def test_partial_rejected_by_default(self):
        order, fills = make_order([101, 102], [100, 100], arrival=100)
        short = OrderRecord(order.order_id, order.security_id, "BUY", 300, order.arrival_ts, order.end_ts, 100.0)
        with pytest.raises(PartialFill):
            decompose(short, fills)

    def test_partial_mode_marks_remainder_at_last_price(self):
        order, fills = make_order([101, 102], [100, 100], arrival=100)
        short = OrderRecord(order.order_id, order.security_id, "BUY", 300, order.arrival_ts, order.end_ts, 100.0)
        d = decompose(short, fills, allow_partial=True)
        assert d.partial
        # as if 100 more printed at 102
        full, ff = make_order([101, 102, 102], [100, 100, 100], arrival=100)
        ref = decompose(full, ff)
        assert d.is_currency == ref.is_currency and d.mi_currency == ref.mi_currency

    def test_zero_duration(self):
        t = datetime(2014, 11, 17, 10)
        order = OrderRecord("Z", "S", "BUY", 1, t, t, 1.0)
        with pytest.raises(ZeroDuration):
            vwet(order, (Fill(t, 1, 1.0),))


prices_st = st.lists(st.integers(900, 1100), min_size=1, max_size=30)


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(prices_st, st.data(), st.sampled_from(["BUY", "SELL"]), st.integers(900, 1100))
    def test_identity_and_oracle(self, ticks, data, side, p0):
        shares = data.draw(st.lists(st.integers(1, 5000), min_size=len(ticks), max_size=len(ticks)))
        prices = [t / 100 for t in ticks]
        order, fills = make_order(prices, shares, side=side, arrival=p0 / 100)
        d = decompose(order, fills)
        for form in ("simple", "complex"):
            assert d.is_bps == d.mi_bps[form] + d.mt_bps[form]
            assert d.mi_bps[form] >= 0
        is_, mi_s, mi_c = oracle(p0 / 100, prices, shares, 1 if side == "BUY" else -1)
        assert_allclose([d.is_currency, d.mi_currency["simple"], d.mi_currency["complex"]],
                        [is_, mi_s, mi_c], rtol=1e-9, atol=1e-6)
        notional = sum(shares) * p0 / 100
        assert_allclose(d.is_bps, 1e4 * is_ / notional, rtol=1e-9, atol=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(1, 500), min_size=1, max_size=25), st.data())
    def test_monotone_complex_timing_zero(self, steps, data):
        shares = data.draw(st.lists(st.integers(1, 1000), min_size=len(steps), max_size=len(steps)))
        prices = list(np.cumsum(steps) / 100 + 20.0)
        order, fills = make_order(prices, shares, arrival=20.0)
        assert market_timing(order, fills, "complex") == 0.0

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(1, 100), min_size=2, max_size=10))
    def test_vwet_reversal(self, shares):
        order, fills = make_order([10.0] * len(shares), shares)
        start, end = order.arrival_ts, order.end_ts
        rev = tuple(Fill(start + (end - f.ts), f.shares, f.price) for f in fills)
        v, r = vwet(order, fills), vwet(order, rev)
        assert 0 <= v <= 100
        assert v + r == pytest.approx(100.0, abs=1e-9)


class TestAuxiliary:
    def window(self, minutes):
        t0 = datetime(2014, 11, 17, 10)
        return t0, t0 + timedelta(minutes=minutes)

    def test_vwet_cases(self):
        t0, t1 = self.window(100)
        order = OrderRecord("V", "S", "BUY", 400, t0, t1, 1.0)
        fills = (Fill(t0 + timedelta(minutes=20), 100, 1.0), Fill(t0 + timedelta(minutes=60), 300, 1.0))
        assert vwet(order, fills) == pytest.approx(50.0)
        assert vwet(order, (Fill(t0, 400, 1.0),)) == 0.0
        sym = (Fill(t0 + timedelta(minutes=25), 200, 1.0), Fill(t0 + timedelta(minutes=75), 200, 1.0))
        assert vwet(order, sym) == pytest.approx(50.0)

    def test_aux(self):
        t0, t1 = self.window(5)
        fills = tuple(Fill(t0 + timedelta(seconds=20 * i), 10, 10.0) for i in range(10))
        order = OrderRecord("A", "S", "BUY", 100, t0, t1, 10.0)
        assert auxiliary_metrics(order, fills).executions_per_minute == 2.0
        two = (Fill(t0, 100, 10.0), Fill(t1, 100, 20.0))
        aux = auxiliary_metrics(OrderRecord("B", "S", "BUY", 200, t0, t1, 10.0), two)
        assert aux.notional == 3000.0
        aux = auxiliary_metrics(OrderRecord("C", "S", "BUY", 400, t0, t1, 10.0),
                                (Fill(t0, 100, 1.0), Fill(t1, 300, 1.0)))
        assert aux.avg_trade_size == 200.0


class TestSpread:
    def setup_method(self):
        d = date(2014, 11, 17)
        # slot 0 mid = 10.0
        self.ds = make_dataset([("S", "SH", 1e9, "X", None)], {("S", d): [(10, 10.5, 9.5, 10, 100)] * 8})
        self.t0 = datetime(2014, 11, 17, 9, 30)

    def order(self, prices, side="BUY"):
        fills = tuple(Fill(self.t0 + timedelta(minutes=i + 1), 100, p) for i, p in enumerate(prices))
        return OrderRecord("S1", "S", side, 100 * len(prices), self.t0, self.t0 + timedelta(minutes=20), 10.0), fills

    def test_at_mid(self):
        o, f = self.order([10.0, 10.0])
        assert spread_metrics(o, f, self.ds, 5.0) == (0.0, 0.0)

    def test_full_half_spread(self):
        o, f = self.order([10.005])
        m = spread_metrics(o, f, self.ds, 5.0)
        assert m.spread_paid_pct == pytest.approx(100.0)
        assert m.spread_cost_bps == pytest.approx(-5.0)
        o, f = self.order([9.995], side="SELL")
        assert spread_metrics(o, f, self.ds, 5.0).spread_paid_pct == pytest.approx(100.0)

    def test_half_at_touch(self):
        # equal notional: 100 @ 10 and 100 @ 10.005 differ by 0.05% in notional
        o, f = self.order([10.0, 10.005])
        m = spread_metrics(o, f, self.ds, 5.0)
        expect = 100.0 * (10.005 * 1.0) / (10.0 + 10.005)
        assert m.spread_paid_pct == pytest.approx(expect)

    def test_missing_bar(self):
        o, f = self.order([10.0])
        f = (Fill(datetime(2014, 11, 18, 10), 100, 10.0),)
        assert spread_metrics(o, f, self.ds) is None


class TestBands:
    @pytest.mark.parametrize("ret,band", [
        (-3.0, "Significant Adverse"), (-2.0, "Adverse"), (-1.0, "Adverse"), (-1 / 3, "Neutral"),
        (0.0, "Neutral"), (1 / 3, "Neutral"), (1.0, "Favorable"), (2.0, "Favorable"),
        (3.0, "Significant Favorable"),
    ])
    def test_momentum(self, ret, band):
        assert momentum_band(ret) == band

    @pytest.mark.parametrize("cv,band", [
        (0.0, "No Volatility"), (1e-15, "No Volatility"), (1e-6, "Low Volatility"),
        (0.001, "Low Volatility"), (0.003, "Moderate Volatility"), (0.005, "Moderate Volatility"),
        (0.02, "High Volatility"),
    ])
    def test_volatility(self, cv, band):
        assert volatility_band(cv) == band

    @pytest.mark.parametrize("v,band", [(0, "Negligible Volume Shift"), (29.9, "Negligible Volume Shift"),
                                        (30, "Small Volume Shift"), (40, "Large Volume Shift")])
    def test_vem(self, v, band):
        assert vem_band(v) == band

    @pytest.mark.parametrize("cap,band", [(5e8, "Small"), (1e9, "Mid"), (9.9e9, "Mid"), (1e10, "Large")])
    def test_cap(self, cap, band):
        assert cap_band(cap) == band

    @pytest.mark.parametrize("pct,band", [(0.5, "0-1%"), (1.0, "1-5%"), (7, "5-10%"), (24, "10-25%"),
                                          (49.9, "25-50%"), (50, "50%+"), (math.inf, "50%+")])
    def test_adv(self, pct, band):
        assert adv_band(pct) == band

    def test_classify_flat_market(self):
        days = [date(2014, 11, d) for d in (12, 13, 14, 17)]
        ds = make_dataset([("S", "SH", 2e9, "Energy", None)], {("S", d): flat_day(8, 10.0, 100) for d in days})
        order, fills = make_order([10.0], [80], arrival=10.0, sid="S")
        b = classify_buckets(order, fills, ds)
        assert (b.momentum, b.volatility, b.vem, b.cap, b.sector) == (
            "Neutral", "No Volatility", "Negligible Volume Shift", "Mid", "Energy")
        assert b.pct_adv == pytest.approx(10.0)
        assert b.adv_band == "10-25%"

    def test_classify_trend(self):
        days = [date(2014, 11, 14), date(2014, 11, 17)]
        rising = [(10 + 0.1 * j, 10 + 0.1 * j, 10 + 0.1 * j, 10.1 + 0.1 * j, 100) for j in range(8)]
        ds = make_dataset([("S", "SH", 2e10, "Energy", None)], {("S", d): rising for d in days})
        order, fills = make_order([10.0], [10], arrival=10.0, sid="S")
        # window covers slots 0..0: open 10.0, close 10.1 -> +1% against a buyer
        assert classify_buckets(order, fills, ds).momentum == "Adverse"
        order, fills = make_order([10.0], [10], side="SELL", arrival=10.0, sid="S")
        assert classify_buckets(order, fills, ds).momentum == "Favorable"


class TestReport:
    def test_small_fixture(self, small):
        o = small.orders["O1"]
        r = cost_report(o, small.fills["O1"], small)
        # P0 = 11.0; fills 100 @ 11.0, 11.1, 11.2
        assert r.is_currency == pytest.approx(30.0)
        assert r.mi_complex_currency == pytest.approx(0.1 * 200 + 0.1 * 100)
        assert r.mi_simple_currency == pytest.approx(20.0)
        row = report_row(r)
        assert list(row) == list(COST_COLUMNS)
        assert row["is_bps"] == -r.is_bps
        assert row["bucket_adv"] == adv_band(100 * 300 / 66000)

    def test_sell_gain_shows_positive(self, small):
        r = cost_report(small.orders["O5"], small.fills["O5"], small)
        # sold below arrival: a cost, so the display value is negative
        assert r.is_bps > 0 and report_row(r)["is_bps"] < 0
