"""Exponential-kernel Hawkes baseline.

The baseline rate is h(t) = c + sum_l D_l(t) with per-component running sums
D_l(t) = sum_{T_j < t} d_l exp(-a_l (t - T_j)).  An event at time t does not
contribute to h(t): the summation is over the open interval (-inf, t).
All times here are float seconds; callers convert from nanosecond stamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class KernelParams:
    """Hawkes parameters psi = (c, d_1..d_L, a_1..a_L)."""

    c: float
    d: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "a", a)
        if d.shape != a.shape:
            raise ValueError("d and a must have the same length")
        if self.c <= 0:
            raise ValueError("baseline rate c must be positive")
        if np.any(a <= 0):
            raise ValueError("decay rates a must be positive")
        if np.any(d < 0):
            raise ValueError("excitation magnitudes d must be nonnegative")

    @property
    def L(self) -> int:
        return int(self.d.size)

    def normalized(self) -> "KernelParams":
        """Divide the excitation terms by d_1 (identification d_1 = 1)."""
        if self.d[0] <= 0:
            raise ValueError("cannot normalize with d_1 = 0")
        return KernelParams(self.c, self.d / self.d[0], self.a)


@dataclass(frozen=True)
class ParameterBounds:
    """Closed box constraints for (c, d, a), with duration-quantile scalers."""

    c_range: tuple[float, float]
    d_range: tuple[float, float]
    a_range: tuple[float, float]
    q_dur10: float = 1.0
    q_dur50: float = 1.0

    def __post_init__(self):
        for name, (lo, hi) in (("c", self.c_range), ("d", self.d_range), ("a", self.a_range)):
            if lo > hi:
                raise ValueError(f"empty {name} interval")
        if self.c_range[0] <= 0 or self.a_range[0] <= 0:
            raise ValueError("lower bounds of c and a must be strictly positive")

    @classmethod
    def simulation(cls) -> "ParameterBounds":
        """Wide boxes used for validation on simulated data."""
        return cls(c_range=(1e-9, 10.0), d_range=(1e-9, 1e3), a_range=(1e-9, 1e4))

    @classmethod
    def from_durations(cls, q_dur10: float, q_dur50: float) -> "ParameterBounds":
        """Production boxes scaled by trade-duration quantiles."""
        if q_dur10 <= 0 or q_dur50 <= 0:
            raise ValueError("duration quantiles must be positive")
        return cls(
            c_range=(1e-3 / q_dur50, 10.0 / q_dur50),
            d_range=(0.0, 1.0 / q_dur50),
            a_range=(1e-2 / q_dur10, 10.0 / q_dur10),
            q_dur10=q_dur10,
            q_dur50=q_dur50,
        )

    def contains(self, params: KernelParams) -> bool:
        return bool(
            self.c_range[0] <= params.c <= self.c_range[1]
            and np.all((params.d >= self.d_range[0]) & (params.d <= self.d_range[1]))
            and np.all((params.a >= self.a_range[0]) & (params.a <= self.a_range[1]))
        )


@dataclass(frozen=True)
class KernelState:
    """Running decay sums D_l at time t; a value type, cheap to copy."""

    decay: np.ndarray
    t: float

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.decay, dtype=float))
        object.__setattr__(self, "decay", d)
        object.__setattr__(self, "t", float(self.t))
        if np.any(d < 0):
            raise ValueError("decay sums must be nonnegative")

    @classmethod
    def empty(cls, L: int, t: float = 0.0) -> "KernelState":
        return cls(np.zeros(L), t)

    @classmethod
    def from_history(cls, params: KernelParams, event_times, t: float) -> "KernelState":
        """State at time t from events strictly before t."""
        times = np.asarray(event_times, dtype=float)
        times = times[times < t]
        decay = np.array(
            [float(np.sum(dl * np.exp(-al * (t - times)))) for dl, al in zip(params.d, params.a)]
        )
        return cls(decay, t)


def _decayed(state: KernelState, params: KernelParams, t: float) -> np.ndarray:
    if t < state.t:
        raise ValueError(f"time regression: t={t} earlier than state time {state.t}")
    return state.decay * np.exp(-params.a * (t - state.t))


def h_at(state: KernelState, params: KernelParams, t: float) -> float:
    """Baseline h(t) = c + sum_l D_l(t), with exact decay from the state."""
    return params.c + float(np.sum(_decayed(state, params, t)))


def advance(state: KernelState, params: KernelParams, t: float, jump: bool = False) -> KernelState:
    """Move the state to time t; if ``jump``, add an event at t afterwards."""
    decay = _decayed(state, params, t)
    if jump:
        decay = decay + params.d
    return KernelState(decay, t)


def integrate_h(state: KernelState, params: KernelParams, s: float, t: float) -> float:
    """Closed-form integral of h over [s, t] with no events inside (s, t)."""
    if t < s:
        raise ValueError("interval end before start")
    if t == s:
        return 0.0
    decay_s = _decayed(state, params, s)
    tau = t - s
    return params.c * tau + float(np.sum(decay_s * (1.0 - np.exp(-params.a * tau)) / params.a))


def integrate_hg_squared(
    state: KernelState,
    params: KernelParams,
    g_value: float,
    s: float,
    t: float,
    method: str = "closed",
    rng: np.random.Generator | None = None,
    n_samples: int = 100_000,
) -> float:
    """Integral of (h g)^2 over [s, t] with g constant and no events inside.

    The closed form carries the cross terms exp(-(a_l + a_l')(u - s)).  The
    Monte Carlo path exists for cross-checking only.
    """
    if t < s:
        raise ValueError("interval end before start")
    if t == s or g_value == 0.0:
        return 0.0
    decay_s = _decayed(state, params, s)
    tau = t - s
    if method == "mc":
        if rng is None:
            rng = np.random.default_rng(0)
        u = rng.uniform(0.0, tau, size=n_samples)
        h = params.c + np.exp(-np.outer(u, params.a)) @ decay_s
        return float(g_value**2 * tau * np.mean(h**2))
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    c = params.c
    a = params.a
    out = c * c * tau
    out += float(np.sum(2.0 * c * decay_s * (1.0 - np.exp(-a * tau)) / a))
    asum = a[:, None] + a[None, :]
    cross = np.outer(decay_s, decay_s) * (1.0 - np.exp(-asum * tau)) / asum
    out += float(np.sum(cross))
    return g_value * g_value * out


class BranchingRatio(NamedTuple):
    value: float
    stable: bool


def branching_ratio(params: KernelParams, g_bound: float) -> BranchingRatio:
    """Expected offspring per event, g_bound * sum_l d_l / a_l."""
    if g_bound < 0:
        raise ValueError("g_bound must be nonnegative")
    value = float(g_bound * np.sum(params.d / params.a))
    return BranchingRatio(value, value < 1.0)
