"""Raw covariate transforms and quantile-bin one-hot encoding."""

import numpy as np
import pytest

from obhawkes.covariates import (
    DAY_NS,
    SESSION_CLOSE_S,
    SESSION_OPEN_S,
    EncoderSpec,
    encode_path,
    ewma,
    ewma_daily,
    fit_encoder,
    nearest_rank_quantile,
    one_hot_encode,
    sample_and_lag,
    seasonal,
    trade_imbalance,
    volume_imbalance,
)
from obhawkes.streams import NS_PER_SEC, RawCovariatePath


class TestEwma:
    def test_first_value_passthrough(self):
        np.testing.assert_allclose(ewma([1.0, 2.0], 0.98), [1.0, 1.02])

    def test_constant_fixed_point(self):
        np.testing.assert_allclose(ewma([5.0] * 10, 0.9), [5.0] * 10)

    def test_sign_flip(self):
        np.testing.assert_allclose(ewma([10.0, -10.0], 0.98), [10.0, 9.6])

    def test_convex_combination(self, rng):
        v = rng.normal(size=200)
        out = ewma(v, 0.95)
        assert np.all(out <= v.max() + 1e-12) and np.all(out >= v.min() - 1e-12)

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            ewma([1.0], 1.0)

    def test_daily_restart(self):
        t = np.array([0, 1, DAY_NS, DAY_NS + 1], dtype=np.int64)
        v = np.array([1.0, 2.0, 10.0, 20.0])
        out = ewma_daily(t, v, 0.98)
        np.testing.assert_allclose(out, [1.0, 1.02, 10.0, 10.2])


class TestImbalances:
    def test_symmetric_zero(self):
        assert volume_imbalance([100.0], [100.0])[0] == 0.0

    def test_one_third(self):
        assert volume_imbalance([100.0], [50.0])[0] == pytest.approx(1 / 3)

    def test_boundary(self):
        assert volume_imbalance([10.0], [0.0])[0] == 1.0

    def test_carry_forward_on_empty(self):
        out = volume_imbalance([100.0, 0.0, 50.0], [50.0, 0.0, 100.0])
        np.testing.assert_allclose(out, [1 / 3, 1 / 3, -1 / 3])

    def test_leading_undefined_is_zero(self):
        assert volume_imbalance([0.0, 10.0], [0.0, 10.0])[0] == 0.0

    def test_trade_imbalance_single_buy(self):
        assert trade_imbalance([10.0])[0] == 1.0

    def test_trade_imbalance_buy_then_sell(self):
        out = trade_imbalance([10.0, -10.0], alpha=0.98)
        assert out[1] == pytest.approx(0.96)

    def test_trade_imbalance_bounded(self, rng):
        s = rng.choice([-1.0, 1.0], size=500) * rng.uniform(1, 100, size=500)
        out = trade_imbalance(s, 0.9)
        assert np.all(np.abs(out) <= 1.0 + 1e-12)


class TestSeasonal:
    def test_endpoints_and_midpoint(self):
        t = (np.array([SESSION_OPEN_S, 46800.0, SESSION_CLOSE_S]) * NS_PER_SEC).astype(np.int64)
        np.testing.assert_allclose(seasonal(t), [0.0, 0.5, 1.0])

    def test_outside_session_clamps_with_warning(self):
        t = np.array([int(30000 * NS_PER_SEC)])
        with pytest.warns(UserWarning):
            out = seasonal(t)
        assert out[0] == 0.0


class TestEncoder:
    def test_distinct_quantiles_eight_bins(self, rng):
        z = rng.normal(size=(5000, 1))
        raw = RawCovariatePath(np.arange(5000, dtype=np.int64) + 1, z, ("x",))
        spec = fit_encoder(raw)
        assert spec.bins == (8,)
        assert spec.dim == 9  # constant column + 8 indicator bins

    def test_duplicate_quantiles_truncate(self):
        # discrete sample where q50 = q75 = q90: spread-like covariate with a
        # heavy atom; the cut list stops at the first repeat -> 5 bins
        vals = np.concatenate([
            np.full(2, 0.5), np.full(10, 1.0), np.full(20, 1.5),
            np.full(60, 2.0), np.full(8, 3.0)
        ])
        n = vals.size
        raw = RawCovariatePath(np.arange(n, dtype=np.int64) + 1, vals[:, None], ("spread",))
        spec = fit_encoder(raw)
        qs = np.sort(vals)
        assert nearest_rank_quantile(qs, 50) == nearest_rank_quantile(qs, 75) == 2.0
        assert spec.bins == (5,)
        np.testing.assert_allclose(spec.breakpoints[0], [0.5, 1.0, 1.5, 2.0])

    def test_constant_covariate_single_bin(self):
        raw = RawCovariatePath(np.arange(10, dtype=np.int64) + 1, np.ones((10, 1)), ("c",))
        with pytest.warns(UserWarning):
            spec = fit_encoder(raw)
        assert spec.bins == (1,)

    def test_feature_names_and_blocks(self, rng):
        z = np.column_stack([rng.normal(size=200), rng.uniform(size=200)])
        raw = RawCovariatePath(np.arange(200, dtype=np.int64) + 1, z, ("a", "b"))
        spec = fit_encoder(raw)
        assert spec.feature_names[0] == "const"
        blocks = spec.block_slices()
        assert blocks["a"].start == 1
        assert blocks["b"].stop == spec.dim


class TestOneHot:
    def duration_spec(self):
        # bins [(k-1)/10, k/10) for k<=10 and [1, inf)
        return EncoderSpec(("dur",), (np.arange(1, 11) / 10.0,), include_constant=False)

    def test_first_bin(self):
        X = one_hot_encode(np.array([[0.05]]), self.duration_spec())
        assert X.shape == (1, 11)
        assert X[0, 0] == 1.0 and X[0].sum() == 1.0

    def test_overflow_bin(self):
        X = one_hot_encode(np.array([[2.5]]), self.duration_spec())
        assert X[0, 10] == 1.0 and X[0].sum() == 1.0

    def test_breakpoint_goes_right(self):
        X = one_hot_encode(np.array([[0.1]]), self.duration_spec())
        assert X[0, 1] == 1.0

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            one_hot_encode(np.array([[np.nan]]), self.duration_spec())

    def test_block_sums_and_range(self, rng):
        z = np.column_stack([rng.normal(size=300), rng.exponential(size=300)])
        raw = RawCovariatePath(np.arange(300, dtype=np.int64) + 1, z, ("a", "b"))
        spec = fit_encoder(raw)
        X = one_hot_encode(z, spec)
        assert np.all((X == 0.0) | (X == 1.0))
        for sl in spec.block_slices().values():
            np.testing.assert_array_equal(X[:, sl].sum(axis=1), 1.0)

    def test_encode_path_preserves_lag_flag(self, rng):
        z = rng.normal(size=(50, 1))
        raw = RawCovariatePath(np.arange(50, dtype=np.int64) + 1, z, ("a",), lagged=True)
        path = encode_path(raw, fit_encoder(raw))
        assert path.lagged and path.dim == fit_encoder(raw).dim


class TestSampleAndLag:
    def make_raw(self):
        return RawCovariatePath(
            (np.array([1.0, 2.0]) * NS_PER_SEC).astype(np.int64),
            np.array([[10.0], [20.0]]),
            ("v",),
        )

    def test_reference_at_update_sees_previous(self):
        out, dropped = sample_and_lag(self.make_raw(), [int(2 * NS_PER_SEC)])
        assert dropped == 0
        assert out.values[0, 0] == 10.0  # strictly-before value, not 20
        assert out.lagged

    def test_reference_between_updates(self):
        out, _ = sample_and_lag(self.make_raw(), [int(1.5 * NS_PER_SEC)])
        assert out.values[0, 0] == 10.0

    def test_reference_before_data_dropped(self):
        out, dropped = sample_and_lag(self.make_raw(), [int(0.5 * NS_PER_SEC)])
        assert dropped == 1 and out.m == 0

    def test_measurability_under_perturbation(self):
        # perturbing the covariate AT the reference time must not change output
        raw = self.make_raw()
        perturbed = RawCovariatePath(raw.times_ns, raw.values + np.array([[0.0], [99.0]]), ("v",))
        r = [int(2 * NS_PER_SEC)]
        a, _ = sample_and_lag(raw, r)
        b, _ = sample_and_lag(perturbed, r)
        np.testing.assert_array_equal(a.values, b.values)


class TestNearestRank:
    def test_small_sample(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert nearest_rank_quantile(x, 25) == 1.0  # ceil(0.25*4)=1st value
        assert nearest_rank_quantile(x, 50) == 2.0
        assert nearest_rank_quantile(x, 100) == 4.0
