import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conservative_thresholds import (
    BinnedPair,
    CostError,
    Grid,
    InvalidPairError,
    LabeledDataset,
    RangeError,
    make_context_from_jstar,
    make_cost_context,
    validate_binned_pair,
)


class TestGrid:
    def test_rejects_small_or_non_integer(self):
        for bad in (1, 0, -3, 2.5, True):
            with pytest.raises(RangeError):
                Grid(bad)

    def test_index_round_trip_is_exact(self):
        for m in (2, 3, 7, 10, 99, 100, 1000):
            g = Grid(m)
            assert all(g.index(g.value(i)) == i for i in range(m + 1))

    def test_size_counts_both_endpoints(self):
        assert Grid(10).size == 11


class TestCostContext:
    def test_colorectal_costs(self):
        ctx = make_cost_context(-11, -1, -100, 0, Grid(100))
        assert ctx.profit == 89 and ctx.loss == 1
        assert ctx.j_star == pytest.approx(100 / 90, rel=1e-12)

    def test_symmetric_utilities_give_midpoint(self):
        ctx = make_cost_context(1, -1, -1, 1, Grid(100))
        assert (ctx.profit, ctx.loss, ctx.j_star, ctx.p_sym, ctx.l_sym) == (2, 2, 50, 1, 1)

    def test_nineteen_to_one(self):
        ctx = make_cost_context(19, -1, 0, 0, Grid(100))
        assert ctx.j_star == pytest.approx(5, rel=1e-12)
        assert ctx.p_sym == pytest.approx(19, rel=1e-12) and ctx.l_sym == 1

    @pytest.mark.parametrize("utils", [(0, -1, 0, 0), (1, 0, 1, 0), (1, 2, 0, 1), (-1, -1, 0, 0)])
    def test_non_positive_profit_or_loss(self, utils):
        with pytest.raises(CostError):
            make_cost_context(*utils, Grid(10))

    def test_extreme_ratio_underflows(self):
        with pytest.raises(CostError):
            make_cost_context(1e300, 0, 0, 1e-300, Grid(10))

    @pytest.mark.parametrize("js, p, l", [(50, 1, 1), (5, 19, 1), (99, 1, 99)])
    def test_from_jstar(self, js, p, l):
        ctx = make_context_from_jstar(js, Grid(100))
        assert ctx.p_sym == pytest.approx(p, rel=1e-12) and ctx.l_sym == pytest.approx(l, rel=1e-12)

    @pytest.mark.parametrize("js", [0, 100, -1, 101, math.nan, math.inf])
    def test_from_jstar_range(self, js):
        with pytest.raises(RangeError):
            make_context_from_jstar(js, Grid(100))

    @given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(-50, 50), st.floats(-50, 50), st.integers(2, 500))
    def test_ratio_identities_and_round_trip(self, profit, loss, u_fn, u_fp, m):
        ctx = make_cost_context(u_fn + profit, u_fp, u_fn, u_fp + loss, Grid(m))
        ratio = ctx.profit / ctx.loss
        assert (m - ctx.j_star) / ctx.j_star == pytest.approx(ratio, rel=1e-9)
        assert min(ctx.p_sym, ctx.l_sym) == 1
        assert ctx.p_sym / ctx.l_sym == pytest.approx(ratio, rel=1e-9)
        back = make_context_from_jstar(ctx.j_star, Grid(m))
        assert back.p_sym == pytest.approx(ctx.p_sym, rel=1e-9)
        assert back.l_sym == pytest.approx(ctx.l_sym, rel=1e-9)


class TestBinnedPair:
    def test_point_mass_at_zero_is_valid(self):
        assert validate_binned_pair(BinnedPair.constant(Grid(10), 0, 0.0)) is None

    def test_mass_sum(self):
        mu = np.zeros(11)
        mu[2] = 0.98
        v = validate_binned_pair(BinnedPair(Grid(10), mu, np.where(mu > 0, 0.2, np.nan)))
        assert v.code == "mass sum"

    def test_missing_conditional_mean(self):
        mu = np.zeros(11)
        mu[3], mu[5] = 0.5, 0.5
        yt = np.full(11, np.nan)
        yt[5] = 0.5
        v = validate_binned_pair(BinnedPair(Grid(10), mu, yt))
        assert (v.code, v.bin) == ("missing conditional mean", 3)

    def test_other_violations(self):
        g = Grid(4)
        cases = {
            "length": BinnedPair(g, [1.0], [0.5]),
            "negative mass": BinnedPair(g, [1.5, -0.5, 0, 0, 0], [0.1, 0.1, None, None, None]),
            "unexpected conditional mean": BinnedPair(g, [1, 0, 0, 0, 0], [0.1, 0.3, None, None, None]),
            "conditional mean range": BinnedPair(g, [1, 0, 0, 0, 0], [1.2, None, None, None, None]),
        }
        for code, pair in cases.items():
            assert validate_binned_pair(pair).code == code

    def test_require_valid_raises(self):
        with pytest.raises(InvalidPairError, match="mass sum"):
            BinnedPair(Grid(2), [0.5, 0, 0], [0.5, None, None]).require_valid()

    def test_arrays_are_read_only(self):
        pair = BinnedPair.calibrated(Grid(4), [0.2, 0.2, 0.2, 0.2, 0.2])
        with pytest.raises(ValueError):
            pair.mu[0] = 1.0

    def test_to_dict_renders_absent_as_none(self):
        d = BinnedPair.constant(Grid(2), 1, 0.4).to_dict()
        assert d == {"m": 2, "mu": [0.0, 1.0, 0.0], "ytilde": [None, 0.4, None]}


class TestLabeledDataset:
    def test_validation(self):
        with pytest.raises(RangeError):
            LabeledDataset([0.5], [2])
        with pytest.raises(RangeError):
            LabeledDataset([1.5], [1])
        with pytest.raises(RangeError):
            LabeledDataset([], [])
        with pytest.raises(RangeError):
            LabeledDataset([0.1, 0.2], [0, 1], ("a",))

    def test_groups(self):
        ds = LabeledDataset([0.1, 0.2, 0.3], [0, 1, 1], ("b", "a", "b"))
        assert ds.group_labels() == ["b", "a"]
        assert len(ds.subset("b")) == 2
        with pytest.raises(RangeError):
            LabeledDataset([0.1], [0]).subset("a")
