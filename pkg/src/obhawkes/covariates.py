"""Raw covariate construction and quantile-bin one-hot encoding.

Raw covariates follow the standard book/trade feature set: per-level volume
imbalances, spread in basis points, EWMA trade imbalance, EWMA durations and
an intraday seasonal.  Encoding maps each raw covariate to indicator bins cut
at empirical quantiles, giving X(t) in [0, 1]^K.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .streams import NS_PER_SEC, CovariatePath, RawCovariatePath

SESSION_OPEN_S = 34_200.0   # 09:30
SESSION_CLOSE_S = 59_400.0  # 16:30
DAY_NS = 86_400 * NS_PER_SEC

ENCODER_QUANTILES = (1, 10, 25, 50, 75, 90, 99)


def ewma(values, alpha: float) -> np.ndarray:
    """out_1 = in_1, out_i = alpha * out_{i-1} + (1 - alpha) * in_i."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return v.copy()
    out, _ = lfilter([1.0 - alpha], [1.0, -alpha], v, zi=[alpha * v[0]])
    return out


def ewma_daily(times_ns, values, alpha: float) -> np.ndarray:
    """EWMA restarted at the start of each calendar day."""
    t = np.asarray(times_ns, dtype=np.int64)
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    days = t // DAY_NS
    for day in np.unique(days):
        m = days == day
        out[m] = ewma(v[m], alpha)
    return out


def volume_imbalance(bid_size, ask_size) -> np.ndarray:
    """(bid - ask) / (bid + ask); empty level carries the previous value."""
    bid = np.asarray(bid_size, dtype=float)
    ask = np.asarray(ask_size, dtype=float)
    denom = bid + ask
    out = np.zeros_like(denom)
    ok = denom > 0
    out[ok] = (bid[ok] - ask[ok]) / denom[ok]
    if not ok.all():
        # carry forward over undefined entries, starting from 0
        idx = np.where(ok, np.arange(out.size), -1)
        idx = np.maximum.accumulate(idx)
        out = np.where(idx >= 0, out[np.maximum(idx, 0)], 0.0)
    return out


def trade_imbalance(signed_sizes, alpha: float = 0.98) -> np.ndarray:
    """EWMA(signed volume) / EWMA(unsigned volume), both with the same alpha."""
    s = np.asarray(signed_sizes, dtype=float)
    if np.any(s == 0):
        raise ValueError("trade sizes must be nonzero")
    num = ewma(s, alpha)
    den = ewma(np.abs(s), alpha)
    return num / den


def seasonal(times_ns) -> np.ndarray:
    """Time-of-day scaled to [0, 1] over the trading session."""
    sec = (np.asarray(times_ns, dtype=np.int64) % DAY_NS) / NS_PER_SEC
    if np.any(sec < SESSION_OPEN_S) or np.any(sec > SESSION_CLOSE_S):
        warnings.warn("timestamps outside the trading session were clamped")
        sec = np.clip(sec, SESSION_OPEN_S, SESSION_CLOSE_S)
    return (sec - SESSION_OPEN_S) / (SESSION_CLOSE_S - SESSION_OPEN_S)


def nearest_rank_quantile(sorted_values: np.ndarray, pct: float) -> float:
    """Order-statistics quantile: the ceil(p/100 * n)-th smallest value."""
    n = sorted_values.size
    k = int(np.ceil(pct / 100.0 * n))
    return float(sorted_values[min(max(k, 1), n) - 1])


@dataclass(frozen=True)
class EncoderSpec:
    """Per-covariate quantile breakpoints and the resulting layout."""

    names: tuple[str, ...]
    breakpoints: tuple[np.ndarray, ...]
    include_constant: bool = True

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(
            self, "breakpoints", tuple(np.asarray(b, dtype=float) for b in self.breakpoints)
        )
        if len(self.names) != len(self.breakpoints):
            raise ValueError("names and breakpoints length mismatch")
        for b in self.breakpoints:
            if b.size > 1 and not np.all(np.diff(b) > 0):
                raise ValueError("breakpoints must be strictly increasing")

    @property
    def bins(self) -> tuple[int, ...]:
        return tuple(b.size + 1 for b in self.breakpoints)

    @property
    def dim(self) -> int:
        return int(sum(self.bins) + (1 if self.include_constant else 0))

    @property
    def feature_names(self) -> tuple[str, ...]:
        out = ["const"] if self.include_constant else []
        for name, nb in zip(self.names, self.bins):
            out.extend(f"{name}[{k}]" for k in range(nb))
        return tuple(out)

    def block_slices(self) -> dict[str, slice]:
        """Column range of each covariate's one-hot block."""
        start = 1 if self.include_constant else 0
        out = {}
        for name, nb in zip(self.names, self.bins):
            out[name] = slice(start, start + nb)
            start += nb
        return out


def fit_encoder(
    sample: RawCovariatePath,
    quantiles=ENCODER_QUANTILES,
    include_constant: bool = True,
) -> EncoderSpec:
    """Cut points at the empirical quantiles of the estimation sample.

    Duplicated quantiles truncate the cut list at the first repeat, matching
    the collapsed-bin construction for discrete covariates; a constant
    covariate yields a single bin.
    """
    if sample.m == 0:
        raise ValueError("cannot fit encoder on an empty sample")
    breaks = []
    for k, name in enumerate(sample.names):
        col = np.sort(sample.values[:, k])
        if col[0] == col[-1]:
            warnings.warn(f"covariate {name!r} is constant; single bin (collinear with constant)")
            breaks.append(np.empty(0))
            continue
        qs = [nearest_rank_quantile(col, p) for p in quantiles]
        kept: list[float] = []
        for q in qs:
            if kept and q <= kept[-1]:
                break
            kept.append(q)
        breaks.append(np.asarray(kept))
    return EncoderSpec(sample.names, tuple(breaks), include_constant)


def one_hot_encode(z: np.ndarray, spec: EncoderSpec) -> np.ndarray:
    """Map raw rows (m, R) to indicator rows (m, K); bins are half-open."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[1] != len(spec.names):
        raise ValueError("raw dimension does not match the encoder")
    if np.any(np.isnan(z)):
        raise ValueError("NaN in raw covariates")
    m = z.shape[0]
    X = np.zeros((m, spec.dim))
    col = 0
    if spec.include_constant:
        X[:, 0] = 1.0
        col = 1
    for k, b in enumerate(spec.breakpoints):
        idx = np.searchsorted(b, z[:, k], side="right")
        X[np.arange(m), col + idx] = 1.0
        col += b.size + 1
    return X


def encode_path(raw: RawCovariatePath, spec: EncoderSpec) -> CovariatePath:
    X = one_hot_encode(raw.values, spec)
    return CovariatePath(raw.times_ns, X, spec.feature_names, lagged=raw.lagged)


def sample_and_lag(
    raw: RawCovariatePath, reference_times_ns
) -> tuple[RawCovariatePath, int]:
    """Sample at reference times using the last value strictly before each.

    Returns the lagged path and the number of reference rows dropped for
    lacking any earlier covariate data.
    """
    ref = np.asarray(reference_times_ns, dtype=np.int64)
    if ref.size > 1 and not np.all(np.diff(ref) > 0):
        raise ValueError("reference times must be strictly increasing")
    idx = np.searchsorted(raw.times_ns, ref, side="left") - 1
    keep = idx >= 0
    dropped = int(np.sum(~keep))
    out = RawCovariatePath(ref[keep], raw.values[idx[keep]], raw.names, lagged=True)
    return out, dropped


def build_raw_covariates(
    book_times_ns,
    bid_sizes,
    ask_sizes,
    bid1_px,
    ask1_px,
    trade_times_ns,
    trade_signed_sizes,
    prefix: str = "",
    include_seasonal: bool = True,
    n_imbalance_levels: int = 3,
) -> RawCovariatePath:
    """Assemble the raw covariate path for one instrument.

    Produces VolImb1..VolImb{n}, Spread (basis points, mid denominator),
    TrdImb98, Dur98, Dur90 and optionally Seas, sampled at the union of book
    and trade times with carry-forward.  EWMAs restart each day.
    """
    bt = np.asarray(book_times_ns, dtype=np.int64)
    tt = np.asarray(trade_times_ns, dtype=np.int64)
    bid_sizes = np.atleast_2d(np.asarray(bid_sizes, dtype=float))
    ask_sizes = np.atleast_2d(np.asarray(ask_sizes, dtype=float))

    book_cols = {}
    for lv in range(n_imbalance_levels):
        book_cols[f"VolImb{lv + 1}"] = volume_imbalance(bid_sizes[:, lv], ask_sizes[:, lv])
    mid = (np.asarray(ask1_px, dtype=float) + np.asarray(bid1_px, dtype=float)) / 2.0
    book_cols["Spread"] = 1e4 * (np.asarray(ask1_px, dtype=float) - np.asarray(bid1_px, dtype=float)) / mid

    trade_cols = {}
    if tt.size:
        trade_cols["TrdImb98"] = trade_imbalance(trade_signed_sizes, 0.98)
        durations = np.empty(tt.size)
        days = tt // DAY_NS
        first_of_day = np.ones(tt.size, dtype=bool)
        first_of_day[1:] = days[1:] != days[:-1]
        durations[1:] = (tt[1:] - tt[:-1]) / NS_PER_SEC
        durations[first_of_day] = 0.0
        trade_cols["Dur98"] = ewma_daily(tt, durations, 0.98)
        trade_cols["Dur90"] = ewma_daily(tt, durations, 0.90)
    else:
        trade_cols = {"TrdImb98": np.empty(0), "Dur98": np.empty(0), "Dur90": np.empty(0)}

    all_times = np.union1d(bt, tt)
    names, cols = [], []

    def ffill(src_times, series):
        idx = np.searchsorted(src_times, all_times, side="right") - 1
        out = np.where(idx >= 0, series[np.maximum(idx, 0)], 0.0)
        return out

    if include_seasonal:
        names.append(f"{prefix}Seas")
        cols.append(seasonal(all_times))
    for name, series in book_cols.items():
        names.append(prefix + name)
        cols.append(ffill(bt, series))
    for name, series in trade_cols.items():
        names.append(prefix + name)
        cols.append(ffill(tt, series) if series.size else np.zeros(all_times.size))
    return RawCovariatePath(all_times, np.column_stack(cols), tuple(names))


def combine_raw_paths(paths: list[RawCovariatePath]) -> RawCovariatePath:
    """Union of update times across instruments with carry-forward."""
    if not paths:
        raise ValueError("no paths to combine")
    all_times = paths[0].times_ns
    for p in paths[1:]:
        all_times = np.union1d(all_times, p.times_ns)
    names, cols = [], []
    for p in paths:
        idx = np.searchsorted(p.times_ns, all_times, side="right") - 1
        vals = np.where(idx[:, None] >= 0, p.values[np.maximum(idx, 0)], 0.0)
        names.extend(p.names)
        cols.append(vals)
    return RawCovariatePath(all_times, np.hstack(cols), tuple(names))
