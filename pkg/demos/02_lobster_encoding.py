"""From raw LOBSTER-format market data to an encoded covariate path.

Builds a synthetic trading session (book updates plus aggressive trades),
runs it through the ingestion pipeline, and shows the feature encoding:
raw covariates (volume imbalances, spread, trade imbalance, duration
EWMAs, seasonality) are sampled strictly before each event, binned at
their quantiles, and one-hot encoded into X(t) in [0,1]^K.
"""

import numpy as np

from obhawkes import (
    BookStream,
    TradeStream,
    build_raw_covariates,
    conflate,
    encode_path,
    extract_events,
    fit_encoder,
    sample_and_lag,
)

rng = np.random.default_rng(7)
NS = 1_000_000_000

# --- synthesize one session: a random-walk book and clustered trades -------
n_updates = 5_000
book_times = 34_200 + np.cumsum(rng.exponential(0.5, size=n_updates))  # from the open
mid = 22395 + np.cumsum(rng.choice([-1, 0, 1], size=n_updates))
books = BookStream(
    times_ns=(book_times * NS).astype(np.int64),
    ask_px=(mid[:, None] + 1) * 100,
    ask_sz=rng.integers(50, 500, size=(n_updates, 1)),
    bid_px=(mid[:, None] - 1) * 100,
    bid_sz=rng.integers(50, 500, size=(n_updates, 1)),
)
n_trades = 800
trade_times = np.sort(rng.uniform(book_times[0] + 1, book_times[-1], size=n_trades))
trades = TradeStream(
    times_ns=(trade_times * NS).astype(np.int64),
    price_ticks=np.full(n_trades, 2239500),
    sizes=rng.integers(10, 600, size=n_trades),
    sides=rng.choice([1, -1], size=n_trades),
)
books, trades = conflate(books), conflate(trades)

# --- events: buy-aggressor trades at least as large as the resting ask -----
events, dropped = extract_events(trades, books, side="buy", kind="large")
print(f"{trades.m} trades -> {events.n} large buy events ({dropped} dropped)")

# --- raw covariates, lagged sampling, quantile one-hot encoding ------------
raw = build_raw_covariates(
    books.times_ns, books.bid_sz, books.ask_sz,
    books.bid_px[:, 0] / 1e4, books.ask_px[:, 0] / 1e4,
    trades.times_ns, trades.signed_sizes,
    n_imbalance_levels=1,
)
lagged, lag_dropped = sample_and_lag(raw, events.times_ns)
spec = fit_encoder(lagged)
path = encode_path(lagged, spec)

print(f"\nraw covariates: {', '.join(raw.names)}")
print(f"encoded dimension K = {path.dim} "
      f"({lag_dropped} events lacked earlier covariate data)")
for name, breaks in zip(spec.names, spec.breakpoints):
    print(f"  {name:10s} -> {len(breaks) + 1} bins, breakpoints {np.round(breaks, 3)}")

# every row: a constant plus one indicator per covariate block
X = path.values
print(f"\nall entries in [0,1]:    {bool(np.all((X >= 0) & (X <= 1)))}")
print(f"one hot per block + const: {bool(np.allclose(X.sum(axis=1), len(spec.names) + 1))}")
