"""LOBSTER-format market data: parsing, conflation, synchronization, events.

Message files carry one row per order-book message with columns
(time in decimal seconds, type, order id, size, price in 1e-4 dollar ticks,
direction); book files are row-aligned with per-level ask price/size and
bid price/size.  Execution messages (visible type 4, hidden type 5) become
trades whose aggressor is the opposite of the resting order's direction.
Prices stay integer ticks end to end; timestamps become integer ns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from .streams import NS_PER_SEC, EventStream, to_ns

EXECUTION_TYPES = (4, 5)
MESSAGE_TYPES = (1, 2, 3, 4, 5, 6, 7)
BUY, SELL = 1, -1
FORMAT_VERSION = 1


class ParseError(ValueError):
    """Malformed input with the file and row where parsing failed."""

    def __init__(self, message: str, file: str = "", row: int | None = None):
        loc = f"{file}:" if file else ""
        if row is not None:
            loc += f"row {row}: "
        super().__init__(loc + message)
        self.file = file
        self.row = row


@dataclass(frozen=True)
class BookStream:
    """Row-per-update order book states; prices in integer ticks."""

    times_ns: np.ndarray
    ask_px: np.ndarray  # (m, levels)
    ask_sz: np.ndarray
    bid_px: np.ndarray
    bid_sz: np.ndarray
    instrument: int = 0

    def __post_init__(self):
        object.__setattr__(self, "times_ns", np.asarray(self.times_ns, dtype=np.int64))
        for name in ("ask_px", "ask_sz", "bid_px", "bid_sz"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=np.int64)))
        m = self.times_ns.size
        for name in ("ask_px", "ask_sz", "bid_px", "bid_sz"):
            if getattr(self, name).shape[0] != m:
                raise ValueError(f"{name} rows do not match timestamps")

    @property
    def m(self) -> int:
        return int(self.times_ns.size)

    @property
    def levels(self) -> int:
        return int(self.ask_px.shape[1])


@dataclass(frozen=True)
class TradeStream:
    """Executed trades; side is the aggressor (+1 buy, -1 sell)."""

    times_ns: np.ndarray
    price_ticks: np.ndarray
    sizes: np.ndarray
    sides: np.ndarray
    instrument: int = 0

    def __post_init__(self):
        object.__setattr__(self, "times_ns", np.asarray(self.times_ns, dtype=np.int64))
        for name in ("price_ticks", "sizes", "sides"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        m = self.times_ns.size
        for name in ("price_ticks", "sizes", "sides"):
            if getattr(self, name).size != m:
                raise ValueError(f"{name} does not match timestamps")
        if m and not np.all(self.sizes > 0):
            raise ValueError("trade sizes must be positive")
        if m and not np.all(np.isin(self.sides, (BUY, SELL))):
            raise ValueError("trade sides must be +/-1")

    @property
    def m(self) -> int:
        return int(self.times_ns.size)

    @property
    def signed_sizes(self) -> np.ndarray:
        return self.sides * self.sizes


def parse_lobster(
    message_file, orderbook_file, instrument: int = 0
) -> tuple[BookStream, TradeStream]:
    """Parse a row-aligned message/book CSV pair (gzip-transparent).

    Returns the full book-update stream and the trade stream extracted from
    execution messages.  Neither stream is conflated.
    """
    try:
        msg = pd.read_csv(message_file, header=None, dtype=float)
    except Exception as exc:
        raise ParseError(f"unreadable message file: {exc}", str(message_file)) from exc
    try:
        book = pd.read_csv(orderbook_file, header=None, dtype=float)
    except Exception as exc:
        raise ParseError(f"unreadable book file: {exc}", str(orderbook_file)) from exc
    if msg.shape[1] < 6:
        raise ParseError(f"expected >= 6 message columns, got {msg.shape[1]}", str(message_file))
    if msg.shape[0] != book.shape[0]:
        raise ParseError(
            f"message rows ({msg.shape[0]}) != book rows ({book.shape[0]})",
            str(message_file),
        )
    if book.shape[1] % 4 != 0 or book.shape[1] == 0:
        raise ParseError(
            f"book columns must come in (ask px, ask sz, bid px, bid sz) groups, got {book.shape[1]}",
            str(orderbook_file),
        )
    if msg.isna().any().any():
        row = int(msg.isna().any(axis=1).idxmax())
        raise ParseError("malformed message row", str(message_file), row)
    if book.isna().any().any():
        row = int(book.isna().any(axis=1).idxmax())
        raise ParseError("malformed book row", str(orderbook_file), row)

    times_ns = to_ns(msg.iloc[:, 0].to_numpy())
    if times_ns.size > 1:
        bad = np.nonzero(np.diff(times_ns) < 0)[0]
        if bad.size:
            raise ParseError("decreasing timestamp", str(message_file), int(bad[0]) + 1)
    mtype = msg.iloc[:, 1].to_numpy()
    if not np.all(np.isin(mtype, MESSAGE_TYPES)):
        row = int(np.nonzero(~np.isin(mtype, MESSAGE_TYPES))[0][0])
        raise ParseError(f"unknown message type {mtype[row]:g}", str(message_file), row)
    size = msg.iloc[:, 3].to_numpy()
    price = msg.iloc[:, 4].to_numpy()
    direction = msg.iloc[:, 5].to_numpy()

    levels = book.shape[1] // 4
    vals = book.to_numpy()
    books = BookStream(
        times_ns,
        vals[:, 0::4].astype(np.int64),
        vals[:, 1::4].astype(np.int64),
        vals[:, 2::4].astype(np.int64),
        vals[:, 3::4].astype(np.int64),
        instrument,
    )

    is_trade = np.isin(mtype, EXECUTION_TYPES)
    if np.any(is_trade & (size <= 0)):
        row = int(np.nonzero(is_trade & (size <= 0))[0][0])
        raise ParseError("execution with nonpositive size", str(message_file), row)
    if np.any(is_trade & ~np.isin(direction, (BUY, SELL))):
        row = int(np.nonzero(is_trade & ~np.isin(direction, (BUY, SELL)))[0][0])
        raise ParseError("execution with invalid direction", str(message_file), row)
    # a resting sell (direction -1) was hit by a buyer: aggressor = -direction
    trades = TradeStream(
        times_ns[is_trade],
        price[is_trade].astype(np.int64),
        size[is_trade].astype(np.int64),
        (-direction[is_trade]).astype(np.int64),
        instrument,
    )
    return books, trades


def conflate_books(books: BookStream) -> BookStream:
    """Collapse rows sharing a stamp, keeping the last book state."""
    if books.m == 0:
        return books
    last = np.ones(books.m, dtype=bool)
    last[:-1] = books.times_ns[1:] != books.times_ns[:-1]
    return replace(
        books,
        times_ns=books.times_ns[last],
        ask_px=books.ask_px[last],
        ask_sz=books.ask_sz[last],
        bid_px=books.bid_px[last],
        bid_sz=books.bid_sz[last],
    )


def conflate_trades(trades: TradeStream) -> TradeStream:
    """Aggregate same-stamp executions into one trade.

    Partial fills of a single marketable order share a stamp and a side; the
    aggregate carries the total size and the last fill price.  Mixed sides at
    one stamp keep the side with the larger total (with a warning).
    """
    if trades.m == 0:
        return trades
    stamps, start = np.unique(trades.times_ns, return_index=True)
    if stamps.size == trades.m:
        return trades
    prices = np.empty(stamps.size, dtype=np.int64)
    sizes = np.empty(stamps.size, dtype=np.int64)
    sides = np.empty(stamps.size, dtype=np.int64)
    bounds = np.append(start, trades.m)
    mixed = False
    for k in range(stamps.size):
        sl = slice(bounds[k], bounds[k + 1])
        s = trades.sides[sl]
        z = trades.sizes[sl]
        buy_total = int(z[s == BUY].sum())
        sell_total = int(z[s == SELL].sum())
        if buy_total and sell_total:
            mixed = True
        side = BUY if buy_total >= sell_total else SELL
        sides[k] = side
        sizes[k] = max(buy_total, sell_total)
        idx = np.nonzero(s == side)[0]
        prices[k] = trades.price_ticks[sl][idx[-1]]
    if mixed:
        warnings.warn("mixed aggressor sides at a shared stamp; kept the dominant side")
    return replace(trades, times_ns=stamps, price_ticks=prices, sizes=sizes, sides=sides)


def conflate(stream):
    """Conflate a book or trade stream; idempotent."""
    if isinstance(stream, BookStream):
        return conflate_books(stream)
    if isinstance(stream, TradeStream):
        return conflate_trades(stream)
    raise TypeError(f"cannot conflate {type(stream).__name__}")


def synchronize(streams) -> np.ndarray:
    """Merge per-instrument streams into one time-ordered index.

    Returns a structured array (time_ns, instrument, row) sorted by time with
    ties broken by instrument id; ``row`` indexes into that instrument's
    stream.  Inputs must be conflated (strictly increasing stamps each).
    """
    times, instruments, rows = [], [], []
    for s in streams:
        if s.m > 1 and not np.all(np.diff(s.times_ns) > 0):
            raise ValueError(f"stream for instrument {s.instrument} is not conflated")
        times.append(s.times_ns)
        instruments.append(np.full(s.m, s.instrument, dtype=np.int64))
        rows.append(np.arange(s.m, dtype=np.int64))
    t = np.concatenate(times) if times else np.empty(0, dtype=np.int64)
    inst = np.concatenate(instruments) if instruments else np.empty(0, dtype=np.int64)
    row = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    order = np.lexsort((inst, t))
    out = np.empty(t.size, dtype=[("time_ns", np.int64), ("instrument", np.int64), ("row", np.int64)])
    out["time_ns"] = t[order]
    out["instrument"] = inst[order]
    out["row"] = row[order]
    return out


def extract_events(
    trades: TradeStream,
    books: BookStream,
    side: str,
    kind: str = "any",
    window: tuple[int, int] | None = None,
) -> tuple[EventStream, int]:
    """Event times of aggressor-``side`` trades; ``kind='large'`` keeps only
    trades at least as large as the lagged resting top-of-book size on the
    hit side.  Trades with no book state strictly before them are dropped;
    the drop count is returned.
    """
    if side not in ("buy", "sell"):
        raise ValueError("side must be 'buy' or 'sell'")
    if kind not in ("any", "large"):
        raise ValueError("kind must be 'any' or 'large'")
    want = BUY if side == "buy" else SELL
    sel = trades.sides == want
    t = trades.times_ns[sel]
    z = trades.sizes[sel]
    idx = np.searchsorted(books.times_ns, t, side="left") - 1
    covered = idx >= 0
    dropped = int(np.sum(~covered))
    t, z, idx = t[covered], z[covered], idx[covered]
    if kind == "large":
        # a buy aggressor lifts the ask; compare against the lagged ask_1 size
        resting = books.ask_sz[idx, 0] if side == "buy" else books.bid_sz[idx, 0]
        keep = z >= resting
        t = t[keep]
    if window is None:
        first = [books.times_ns[0]] if books.m else []
        if t.size:
            first.append(t[0])
        t0 = int(min(first)) - 1 if first else 0
        t1 = int(t[-1]) if t.size else t0
    else:
        t0, t1 = window
    return EventStream(t, t0, t1), dropped


def save_streams(path, books: BookStream, trades: TradeStream) -> None:
    """Normalized binary form of a parsed day, with a format version."""
    np.savez_compressed(
        path,
        version=np.int64(FORMAT_VERSION),
        instrument=np.int64(books.instrument),
        book_times=books.times_ns,
        ask_px=books.ask_px,
        ask_sz=books.ask_sz,
        bid_px=books.bid_px,
        bid_sz=books.bid_sz,
        trade_times=trades.times_ns,
        trade_price=trades.price_ticks,
        trade_size=trades.sizes,
        trade_side=trades.sides,
    )


def load_streams(path) -> tuple[BookStream, TradeStream]:
    with np.load(path) as z:
        version = int(z["version"])
        if version != FORMAT_VERSION:
            raise ParseError(f"unsupported format version {version}", str(path))
        instrument = int(z["instrument"])
        books = BookStream(
            z["book_times"], z["ask_px"], z["ask_sz"], z["bid_px"], z["bid_sz"], instrument
        )
        trades = TradeStream(
            z["trade_times"], z["trade_price"], z["trade_size"], z["trade_side"], instrument
        )
    return books, trades


def export_lobster(books: BookStream, trades: TradeStream, message_file, orderbook_file) -> None:
    """Write CSV files mirroring the input layout (trades as type-4 rows)."""
    is_trade = np.isin(books.times_ns, trades.times_ns)
    trade_at = {int(t): k for k, t in enumerate(trades.times_ns)}
    with open(message_file, "w") as f:
        for i in range(books.m):
            t = books.times_ns[i] / NS_PER_SEC
            if is_trade[i]:
                k = trade_at[int(books.times_ns[i])]
                row = (4, 0, int(trades.sizes[k]), int(trades.price_ticks[k]), int(-trades.sides[k]))
            else:
                row = (1, 0, 1, int(books.ask_px[i, 0]), 1)
            f.write(f"{t:.9f}," + ",".join(str(x) for x in row) + "\n")
    with open(orderbook_file, "w") as f:
        for i in range(books.m):
            cols = np.empty(4 * books.levels, dtype=np.int64)
            cols[0::4] = books.ask_px[i]
            cols[1::4] = books.ask_sz[i]
            cols[2::4] = books.bid_px[i]
            cols[3::4] = books.bid_sz[i]
            f.write(",".join(str(int(x)) for x in cols) + "\n")


def restrict_levels(books: BookStream, n_levels: int = 3) -> BookStream:
    """Keep updates that change any of the first ``n_levels`` levels."""
    if books.m == 0:
        return books
    top = np.column_stack(
        [
            books.ask_px[:, :n_levels],
            books.ask_sz[:, :n_levels],
            books.bid_px[:, :n_levels],
            books.bid_sz[:, :n_levels],
        ]
    )
    keep = np.ones(books.m, dtype=bool)
    keep[1:] = np.any(top[1:] != top[:-1], axis=1)
    return replace(
        books,
        times_ns=books.times_ns[keep],
        ask_px=books.ask_px[keep],
        ask_sz=books.ask_sz[keep],
        bid_px=books.bid_px[keep],
        bid_sz=books.bid_sz[keep],
    )
