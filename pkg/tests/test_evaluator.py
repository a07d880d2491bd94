"""Exact log-likelihood, model comparison statistic, time-rescaling."""

import numpy as np
import pytest

from conftest import hawkes_thinning_reference
from obhawkes.evaluator import (
    ModelIntegrityError,
    ModelSpec,
    compare,
    log_likelihood,
    time_rescaling_residuals,
)
from obhawkes.kernel import KernelParams
from obhawkes.streams import NS_PER_SEC, CovariatePath, EventStream

P112 = KernelParams(1.0, [1.0], [2.0])


def constant_path(t1_s, value=1.0, K=1):
    return CovariatePath(
        np.array([int(t1_s * NS_PER_SEC)]),
        np.full((1, K), value),
        tuple(f"x{k}" for k in range(K)),
        lagged=True,
    )


class TestModelSpec:
    def test_variant_shapes(self):
        with pytest.raises(ValueError):
            ModelSpec("H1")  # needs kernel + coefficients
        with pytest.raises(ValueError):
            ModelSpec("E", params=P112, b=np.ones(1))
        with pytest.raises(ValueError):
            ModelSpec("H01", params=P112, b=np.ones(1))  # constant environment
        with pytest.raises(ValueError):
            ModelSpec("X9")

    def test_linear_variant_gets_floor(self):
        spec = ModelSpec("H1L", params=P112, b=np.array([1.0]))
        assert spec.floor > 0.0


class TestLogLikelihood:
    def test_unit_intensity(self):
        # lambda = 1, T = 5, 3 events -> 0 - 5
        spec = ModelSpec("E", b=np.array([1.0]))
        events = EventStream.from_seconds([1.0, 2.0, 3.0], t0=0.0, t1=5.0)
        got = log_likelihood(spec, events, constant_path(5.0))
        assert got == pytest.approx(-5.0, abs=1e-12)

    def test_constant_two(self):
        # lambda = 2, T = 1, 1 event -> ln 2 - 2
        spec = ModelSpec("E", b=np.array([2.0]))
        events = EventStream.from_seconds([0.5], t0=0.0, t1=1.0)
        got = log_likelihood(spec, events, constant_path(1.0))
        assert got == pytest.approx(np.log(2.0) - 2.0, abs=1e-12)
        assert got == pytest.approx(-1.3069, abs=1e-4)

    def test_h01_closed_form(self):
        # (c,d,a)=(1,1,2), events at ~0+ and 1, window (eps, 2]
        eps = 1e-9
        spec = ModelSpec("H01", params=P112)
        events = EventStream.from_seconds([eps, 1.0], t0=0.0, t1=2.0)
        got = log_likelihood(spec, events, constant_path(2.0))
        expected = (
            np.log(1.0) + np.log(1.0 + np.exp(-2.0))
            - (2.0 + (1.0 - np.exp(-4.0)) / 2.0 + (1.0 - np.exp(-2.0)) / 2.0)
        )
        assert got == pytest.approx(expected, abs=1e-6)
        assert got == pytest.approx(-2.79625, abs=1e-4)

    def test_pre_window_events_feed_state_not_sum(self):
        spec = ModelSpec("H01", params=P112)
        events = EventStream.from_seconds([1.0, 3.0], t0=0.0, t1=4.0)
        path = constant_path(4.0)
        window = (2 * NS_PER_SEC, 4 * NS_PER_SEC)
        got = log_likelihood(spec, events, path, window=window)
        # manual: event at 3 in window, h(3) = 1 + e^{-2(3-1)} + 0 from event 3 itself
        lam3 = 1.0 + np.exp(-4.0)
        # compensator over (2,4]: state D(2) = e^{-2} decays over 2 seconds,
        # then the in-window event at 3 contributes over its last second
        comp = 2.0 + np.exp(-2.0) * (1 - np.exp(-4.0)) / 2.0 + (1 - np.exp(-2.0)) / 2.0
        assert got == pytest.approx(np.log(lam3) - comp, rel=1e-10)

    def test_restart_ignores_history(self):
        spec = ModelSpec("H01", params=P112)
        events = EventStream.from_seconds([1.0, 3.0], t0=0.0, t1=4.0)
        path = constant_path(4.0)
        window = (2 * NS_PER_SEC, 4 * NS_PER_SEC)
        got = log_likelihood(spec, events, path, window=window, carry_state=False)
        lam3 = 1.0
        comp = 2.0 + (1 - np.exp(-2.0)) / 2.0
        assert got == pytest.approx(np.log(lam3) - comp, rel=1e-10)

    def test_decomposition_over_partition(self):
        times = hawkes_thinning_reference(1.0, 1.0, 2.0, 500, seed=2)
        t1 = float(times[-1])
        events = EventStream.from_seconds(times, t0=0.0, t1=t1)
        spec = ModelSpec("H01", params=P112)
        path = constant_path(t1)
        whole = log_likelihood(spec, events, path)
        mid = int(t1 / 2 * NS_PER_SEC)
        left = log_likelihood(spec, events, path, window=(0, mid))
        right = log_likelihood(spec, events, path, window=(mid, events.t1_ns))
        assert left + right == pytest.approx(whole, rel=1e-10)

    def test_nonpositive_intensity_raises(self):
        spec = ModelSpec("H1", params=P112, b=np.array([0.0]))
        events = EventStream.from_seconds([1.0], t0=0.0, t1=2.0)
        with pytest.raises(ModelIntegrityError):
            log_likelihood(spec, events, constant_path(2.0))

    def test_linear_variant_floor_prevents_failure(self):
        spec = ModelSpec("H1L", params=P112, b=np.array([0.0]))
        events = EventStream.from_seconds([1.0], t0=0.0, t1=2.0)
        got = log_likelihood(spec, events, constant_path(2.0))
        assert np.isfinite(got)


class TestCompare:
    def two_constant_models(self):
        return ModelSpec("E", b=np.array([2.0]), label="M2"), ModelSpec(
            "E", b=np.array([1.0]), label="M1"
        )

    def test_arithmetic_example(self, rng):
        # lambda1 = 2, lambda2 = 1, T = 100, 200 events
        times = np.sort(rng.uniform(0, 100, size=200))
        events = EventStream.from_seconds(times, t0=0.0, t1=100.0)
        spec1, spec2 = self.two_constant_models()
        r = compare(spec1, spec2, events, constant_path(100.0))
        expected = (200 * np.log(2.0) - 100.0) / np.sqrt(100.0 * (np.log(2.0) ** 2) * 2.0)
        assert r.statistic == pytest.approx(expected, rel=1e-12)
        assert r.statistic == pytest.approx(3.940, abs=2e-3)
        assert r.L1 - r.L2 == pytest.approx(200 * np.log(2.0) - 100.0, rel=1e-12)

    def test_antisymmetry_exact(self, rng):
        times = np.sort(rng.uniform(0, 50, size=80))
        events = EventStream.from_seconds(times, t0=0.0, t1=50.0)
        spec1, spec2 = self.two_constant_models()
        path = constant_path(50.0)
        fwd = compare(spec1, spec2, events, path)
        rev = compare(spec2, spec1, events, path)
        assert fwd.statistic == -rev.statistic  # bitwise antisymmetry
        assert fwd.sigma2 == rev.sigma2

    def test_identical_models_degenerate(self, rng):
        times = np.sort(rng.uniform(0, 20, size=30))
        events = EventStream.from_seconds(times, t0=0.0, t1=20.0)
        spec = ModelSpec("E", b=np.array([1.5]))
        r = compare(spec, spec, events, constant_path(20.0))
        assert r.degenerate and np.isnan(r.statistic)
        assert not r.reject_model1 and not r.reject_model2

    def test_rejection_flags(self, rng):
        times = np.sort(rng.uniform(0, 100, size=200))
        events = EventStream.from_seconds(times, t0=0.0, t1=100.0)
        spec1, spec2 = self.two_constant_models()
        r = compare(spec1, spec2, events, constant_path(100.0))
        assert r.reject_model2 and not r.reject_model1

    def test_csv_row_shape(self, rng):
        times = np.sort(rng.uniform(0, 10, size=20))
        events = EventStream.from_seconds(times, t0=0.0, t1=10.0)
        spec1, spec2 = self.two_constant_models()
        row = compare(spec1, spec2, events, constant_path(10.0)).to_row(side="buy")
        assert list(row.keys()) == [
            "model1", "model2", "side", "statistic", "L1", "L2", "sigma2", "n", "T"
        ]


class TestTimeRescaling:
    def test_unit_intensity_residuals_are_interarrivals(self):
        spec = ModelSpec("E", b=np.array([1.0]))
        events = EventStream.from_seconds([1.0, 2.5, 3.0], t0=0.0, t1=5.0)
        res, ks, p = time_rescaling_residuals(spec, events, constant_path(5.0))
        np.testing.assert_allclose(res, [1.0, 1.5, 0.5], atol=1e-12)

    def test_scaling_linearity(self):
        events = EventStream.from_seconds([1.0, 2.0, 4.0], t0=0.0, t1=5.0)
        r1, _, _ = time_rescaling_residuals(
            ModelSpec("E", b=np.array([1.0])), events, constant_path(5.0)
        )
        r2, _, _ = time_rescaling_residuals(
            ModelSpec("E", b=np.array([2.0])), events, constant_path(5.0)
        )
        np.testing.assert_allclose(r2, 2.0 * r1, rtol=1e-12)

    def test_true_spec_passes_ks(self):
        times = hawkes_thinning_reference(1.0, 1.0, 2.0, 10_000, seed=17)
        t1 = float(times[-1])
        events = EventStream.from_seconds(times, t0=0.0, t1=t1)
        spec = ModelSpec("H01", params=P112)
        res, ks, p = time_rescaling_residuals(spec, events, constant_path(t1))
        assert p > 0.01
        assert res.mean() == pytest.approx(1.0, abs=0.05)
