"""Event/covariate containers: validation, windows, persistence."""

import numpy as np
import pytest

from obhawkes.streams import NS_PER_SEC, CovariatePath, EventStream, RawCovariatePath, to_ns


class TestEventStream:
    def test_basic(self):
        ev = EventStream.from_seconds([1.0, 2.0, 3.0], t0=0.0, t1=5.0)
        assert ev.n == 3
        assert ev.duration == 5.0
        np.testing.assert_allclose(ev.times, [1.0, 2.0, 3.0])

    def test_strictly_increasing_required(self):
        with pytest.raises(ValueError):
            EventStream(np.array([10, 10]), 0, 20)

    def test_events_must_lie_in_window(self):
        with pytest.raises(ValueError):
            EventStream(np.array([5]), 5, 20)  # boundary t0 excluded
        with pytest.raises(ValueError):
            EventStream(np.array([25]), 0, 20)
        EventStream(np.array([20]), 0, 20)  # right endpoint included

    def test_restrict(self):
        ev = EventStream.from_seconds([1.0, 2.0, 3.0, 4.0], t0=0.0, t1=5.0)
        sub = ev.restrict(to_ns(np.array([2.0]))[0], to_ns(np.array([4.0]))[0])
        np.testing.assert_allclose(sub.times, [3.0, 4.0])  # (2, 4] window

    def test_csv_round_trip(self, tmp_path):
        ev = EventStream(np.array([123456789, 987654321]), 0, 10**9)
        p = tmp_path / "ev.csv"
        ev.save_csv(p)
        back = EventStream.load_csv(p, t0_ns=0, t1_ns=10**9)
        np.testing.assert_array_equal(back.times_ns, ev.times_ns)


class TestCovariatePath:
    def test_validation(self):
        with pytest.raises(ValueError):
            CovariatePath(np.array([1, 1]), np.zeros((2, 1)), ("a",))
        with pytest.raises(ValueError):
            CovariatePath(np.array([1, 2]), np.zeros((2, 2)), ("a",))

    def test_restrict_adds_closing_row(self):
        path = CovariatePath(
            np.array([1, 2, 3]) * NS_PER_SEC,
            np.array([[0.1], [0.2], [0.3]]),
            ("a",),
        )
        sub = path.restrict(0, int(2.5 * NS_PER_SEC))
        # rows at 1s, 2s plus a closing row at 2.5s; (2, 2.5] is covered by
        # the original row at 3s, whose value is in force on (2, 3]
        assert sub.m == 3
        assert sub.times_ns[-1] == int(2.5 * NS_PER_SEC)
        assert sub.values[-1, 0] == 0.3
        # past the last row the final value is carried forward
        tail = path.restrict(0, int(4.0 * NS_PER_SEC))
        assert tail.values[-1, 0] == 0.3

    def test_csv_round_trip_exact(self, tmp_path):
        vals = np.array([[0.1, 1 / 3], [0.7, np.pi]])
        path = CovariatePath(np.array([10, 20]), vals, ("x", "y"), lagged=True)
        p = tmp_path / "cov.csv"
        path.save_csv(p)
        back = CovariatePath.load_csv(p, lagged=True)
        np.testing.assert_array_equal(back.values, vals)  # bit-exact via repr
        np.testing.assert_array_equal(back.times_ns, path.times_ns)
        assert back.names == ("x", "y")

    def test_raw_path_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            RawCovariatePath(np.array([1]), np.array([[np.inf]]), ("a",))
