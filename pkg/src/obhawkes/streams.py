"""Time-stamped event and covariate containers.

Timestamps are integer nanoseconds since the start of the session so that
ordering and deduplication of exchange stamps are exact.  Conversion to float
seconds happens only at the numerical boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

NS_PER_SEC = 1_000_000_000


def to_seconds(times_ns: np.ndarray) -> np.ndarray:
    return np.asarray(times_ns, dtype=np.int64) / NS_PER_SEC


def to_ns(times_s: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(times_s, dtype=float) * NS_PER_SEC).astype(np.int64)


def _check_strictly_increasing(times_ns: np.ndarray, label: str) -> None:
    if times_ns.size > 1 and not np.all(np.diff(times_ns) > 0):
        raise ValueError(f"{label} timestamps must be strictly increasing")


@dataclass(frozen=True)
class EventStream:
    """Sorted jump times of a counting process on an observation window."""

    times_ns: np.ndarray
    t0_ns: int
    t1_ns: int

    def __post_init__(self):
        t = np.asarray(self.times_ns, dtype=np.int64)
        object.__setattr__(self, "times_ns", t)
        _check_strictly_increasing(t, "event")
        if self.t1_ns < self.t0_ns:
            raise ValueError("window end before window start")
        if t.size and (t[0] <= self.t0_ns or t[-1] > self.t1_ns):
            raise ValueError("events must lie in (t0, t1]")

    @property
    def n(self) -> int:
        return int(self.times_ns.size)

    @property
    def times(self) -> np.ndarray:
        return to_seconds(self.times_ns)

    @property
    def t0(self) -> float:
        return self.t0_ns / NS_PER_SEC

    @property
    def t1(self) -> float:
        return self.t1_ns / NS_PER_SEC

    @property
    def duration(self) -> float:
        return (self.t1_ns - self.t0_ns) / NS_PER_SEC

    @classmethod
    def from_seconds(cls, times_s, t0=0.0, t1=None) -> "EventStream":
        times_ns = to_ns(np.asarray(times_s, dtype=float))
        if t1 is None:
            t1 = float(times_s[-1]) if len(times_s) else t0
        return cls(times_ns, int(round(t0 * NS_PER_SEC)), int(round(t1 * NS_PER_SEC)))

    def restrict(self, t0_ns: int, t1_ns: int) -> "EventStream":
        """Events in (t0, t1] as a new stream with that window."""
        m = (self.times_ns > t0_ns) & (self.times_ns <= t1_ns)
        return EventStream(self.times_ns[m], t0_ns, t1_ns)

    def save_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("timestamp_ns\n")
            for t in self.times_ns:
                f.write(f"{int(t)}\n")

    @classmethod
    def load_csv(cls, path, t0_ns=None, t1_ns=None) -> "EventStream":
        times = np.loadtxt(path, dtype=np.int64, skiprows=1, ndmin=1)
        if t0_ns is None:
            t0_ns = 0
        if t1_ns is None:
            t1_ns = int(times[-1]) if times.size else t0_ns
        return cls(times, int(t0_ns), int(t1_ns))


@dataclass(frozen=True)
class RawCovariatePath:
    """Piecewise-constant raw covariate process Z sampled at update times."""

    times_ns: np.ndarray
    values: np.ndarray  # (m, R)
    names: tuple[str, ...]
    lagged: bool = False

    def __post_init__(self):
        t = np.asarray(self.times_ns, dtype=np.int64)
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "times_ns", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", tuple(self.names))
        _check_strictly_increasing(t, "covariate")
        if v.shape[0] != t.size:
            raise ValueError("times and values length mismatch")
        if v.shape[1] != len(self.names):
            raise ValueError("names and value columns mismatch")
        if not np.all(np.isfinite(v)):
            raise ValueError("covariate values must be finite")

    @property
    def m(self) -> int:
        return int(self.times_ns.size)

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class CovariatePath:
    """Encoded covariate process X with values in [0, 1]^K.

    Row j carries the value in force on (t_{j-1}, t_j]; when ``lagged`` is
    set the row is measurable strictly before t_j.
    """

    times_ns: np.ndarray
    values: np.ndarray  # (m, K)
    names: tuple[str, ...]
    lagged: bool = False

    def __post_init__(self):
        t = np.asarray(self.times_ns, dtype=np.int64)
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "times_ns", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", tuple(self.names))
        _check_strictly_increasing(t, "covariate")
        if v.shape[0] != t.size:
            raise ValueError("times and values length mismatch")
        if v.shape[1] != len(self.names):
            raise ValueError("names and value columns mismatch")

    @property
    def m(self) -> int:
        return int(self.times_ns.size)

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def times(self) -> np.ndarray:
        return to_seconds(self.times_ns)

    def restrict(self, t0_ns: int, t1_ns: int) -> "CovariatePath":
        """Rows with t0 < t_j <= t1, plus a closing row at t1 if needed.

        Row j carries the value in force on (t_{j-1}, t_j], so the segment up
        to t1 belongs to the first original row at or after t1; past the last
        row the final value is carried forward.
        """
        m = (self.times_ns > t0_ns) & (self.times_ns <= t1_ns)
        times = self.times_ns[m]
        values = self.values[m]
        if self.m and (times.size == 0 or times[-1] < t1_ns):
            idx = np.searchsorted(self.times_ns, t1_ns, side="left")
            idx = min(idx, self.m - 1)
            times = np.append(times, np.int64(t1_ns))
            values = np.vstack([values, self.values[idx]])
        return replace(self, times_ns=times, values=values)

    def save_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("timestamp_ns," + ",".join(self.names) + "\n")
            for t, row in zip(self.times_ns, self.values):
                f.write(f"{int(t)}," + ",".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load_csv(cls, path, lagged: bool = False) -> "CovariatePath":
        with open(path) as f:
            header = f.readline().strip().split(",")
            names = tuple(header[1:])
            times, rows = [], []
            for line in f:
                parts = line.strip().split(",")
                times.append(int(parts[0]))
                rows.append([float(x) for x in parts[1:]])
        values = np.asarray(rows, dtype=float) if rows else np.zeros((0, len(names)))
        return cls(np.asarray(times, dtype=np.int64), values, names, lagged=lagged)
