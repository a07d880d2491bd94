"""Sample-path generation by thinning, and estimation-quality metrics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernel import KernelParams, branching_ratio
from .streams import NS_PER_SEC, CovariatePath, EventStream, to_ns


@dataclass(frozen=True)
class SimDesign:
    """Multiplicative Hawkes design with uniform covariate redraws at events."""

    params: KernelParams
    b0: np.ndarray
    seed: int
    n_jumps: int | None = None
    horizon_s: float | None = None
    burn_in: float = 0.0  # fraction of the path discarded before metrics
    constant_x: np.ndarray | None = None  # fixed covariate instead of redraws

    def __post_init__(self):
        b0 = np.asarray(self.b0, dtype=float)
        object.__setattr__(self, "b0", b0)
        if self.constant_x is not None:
            x = np.asarray(self.constant_x, dtype=float)
            if x.shape != b0.shape or np.any(x < 0) or np.any(x > 1):
                raise ValueError("constant_x must match b0 and lie in [0,1]^K")
            object.__setattr__(self, "constant_x", x)
        if np.any(b0 < 0):
            raise ValueError("true coefficients must be nonnegative")
        if self.n_jumps is None and self.horizon_s is None:
            raise ValueError("need a horizon in jumps or seconds")
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError("burn_in must be in [0, 1)")

    @property
    def K(self) -> int:
        return int(self.b0.size)

    @property
    def g_bound(self) -> float:
        if self.constant_x is not None:
            return float(self.constant_x @ self.b0)
        return float(np.sum(self.b0))  # sup X'b0 over [0,1]^K


class UnstableDesignError(ValueError):
    pass


def simulate(design: SimDesign, force: bool = False) -> tuple[EventStream, CovariatePath]:
    """Thinning with the piecewise bound h(t+) * g: between refreshes h is
    nonincreasing and g is constant, so the bound dominates the intensity.

    Covariates are redrawn uniformly on [0,1]^K at each accepted event; the
    emitted path is left-continuous (row at T_i carries the value in force on
    (T_{i-1}, T_i]).  The RNG is counter-based (Philox) keyed by the seed.
    """
    ratio = branching_ratio(design.params, design.g_bound)
    if not ratio.stable:
        # the bound sup X'b0 is conservative; exactly critical designs are
        # still a.s. finite when g sits below its supremum, so only a
        # strictly supercritical ratio refuses outright
        warnings.warn(
            f"branching ratio {ratio.value:.3f} >= 1; the design may be unstable"
        )
        if ratio.value > 1.0 and not force:
            raise UnstableDesignError(
                f"branching ratio {ratio.value:.3f} > 1; pass force=True to simulate anyway"
            )
    rng = np.random.Generator(np.random.Philox(design.seed))
    c = design.params.c
    d = design.params.d
    a = design.params.a
    b0 = design.b0
    K = design.K
    n_target = design.n_jumps if design.n_jumps is not None else np.inf
    t_max = design.horizon_s if design.horizon_s is not None else np.inf

    chunk = 8192
    exp_buf = rng.exponential(size=chunk)
    uni_buf = rng.random(size=chunk)
    buf_i = 0
    x_buf = rng.random(size=(chunk, K))
    x_i = 0

    def draws():
        nonlocal exp_buf, uni_buf, buf_i
        if buf_i >= chunk:
            exp_buf = rng.exponential(size=chunk)
            uni_buf = rng.random(size=chunk)
            buf_i = 0
        e, u = exp_buf[buf_i], uni_buf[buf_i]
        buf_i += 1
        return e, u

    def draw_x():
        nonlocal x_buf, x_i
        if design.constant_x is not None:
            return design.constant_x
        if x_i >= chunk:
            x_buf = rng.random(size=(chunk, K))
            x_i = 0
        x = x_buf[x_i]
        x_i += 1
        return x

    t = 0.0
    D = np.zeros(design.params.L)
    x = draw_x()
    g = float(x @ b0)
    event_times: list[float] = []
    x_rows: list[np.ndarray] = [x]
    while len(event_times) < n_target and t < t_max:
        lam_bar = (c + D.sum()) * g
        if lam_bar <= 0:
            raise RuntimeError("vanishing intensity bound; degenerate design")
        e, u = draws()
        w = e / lam_bar
        t_cand = t + w
        if t_cand > t_max:
            t = t_max
            break
        decayed = D * np.exp(-a * w)
        lam = (c + decayed.sum()) * g
        t = t_cand
        D = decayed
        if u * lam_bar <= lam:
            event_times.append(t)
            D = D + d
            x = draw_x()
            x_rows.append(x)
            g = float(x @ b0)

    times = np.asarray(event_times)
    if times.size == 0:
        raise RuntimeError("no events generated on the requested horizon")
    times_ns = to_ns(times)
    # exchange stamps must be strictly increasing at ns resolution
    for i in range(1, times_ns.size):
        if times_ns[i] <= times_ns[i - 1]:
            times_ns[i] = times_ns[i - 1] + 1
    if design.horizon_s is None:
        t_end_ns = int(times_ns[-1])
    else:
        t_end_ns = max(int(to_ns(np.array([t_max]))[0]), int(times_ns[-1]))
    events = EventStream(times_ns, 0, t_end_ns)

    # row at T_i carries the draw made at T_{i-1}; a closing row covers (T_n, T].
    row_times = times_ns
    rows = np.asarray(x_rows[: times_ns.size])
    if t_end_ns > (times_ns[-1] if times_ns.size else 0):
        row_times = np.append(row_times, np.int64(t_end_ns))
        rows = np.vstack([rows, x_rows[times_ns.size]])
    names = tuple(f"x{k}" for k in range(K))
    path = CovariatePath(row_times, rows, names, lagged=True)
    return events, path


def burn_in_window(events: EventStream, fraction: float) -> EventStream:
    """Drop the leading fraction of events and open the window after them."""
    if fraction <= 0:
        return events
    k = int(np.floor(events.n * fraction))
    if k == 0:
        return events
    t0 = int(events.times_ns[k - 1])
    return EventStream(events.times_ns[k:], t0, events.t1_ns)


@dataclass
class SimMetrics:
    """Recovery quality of estimated coefficients against the truth."""

    error_counts: dict[float, int]
    fp: int
    fn: int
    p: int
    l1: float
    l2: float


def error_alpha(b_hat, b0, alpha: float) -> int:
    """Count of coordinates off by more than alpha times the nonzero scale."""
    b_hat = np.asarray(b_hat, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    if b_hat.shape != b0.shape:
        raise ValueError("length mismatch")
    nz = np.abs(b0[b0 != 0])
    scale = float(nz.max()) if nz.size else 1.0
    return int(np.sum(np.abs(b_hat - b0) > alpha * scale))


def fp_fn(b_hat, b0, alphas=(0.1, 0.05, 0.01)) -> SimMetrics:
    """False positives/negatives and norm errors scaled by the true norm."""
    b_hat = np.asarray(b_hat, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    if b_hat.shape != b0.shape:
        raise ValueError("length mismatch")
    fp = int(np.sum((b_hat != 0) & (b0 == 0)))
    fn = int(np.sum((b_hat == 0) & (b0 != 0)))
    p = int(np.sum(b0 != 0))
    l1_true = float(np.sum(np.abs(b0)))
    l2_true = float(np.linalg.norm(b0))
    return SimMetrics(
        error_counts={alpha: error_alpha(b_hat, b0, alpha) for alpha in alphas},
        fp=fp,
        fn=fn,
        p=p,
        l1=float(np.sum(np.abs(b_hat - b0))) / l1_true if l1_true else 0.0,
        l2=float(np.linalg.norm(b_hat - b0)) / l2_true if l2_true else 0.0,
    )
