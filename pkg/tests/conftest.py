"""Shared test helpers: independent reference implementations used as oracles."""

import numpy as np
import pytest


def hawkes_thinning_reference(c, d, a, n_events, seed, g=1.0):
    """Plain exponential-kernel Hawkes sampler, written independently of the
    package's simulator: intensity lambda(t) = g * (c + sum d_l exp decay).
    """
    rng = np.random.default_rng(seed)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    t = 0.0
    decay = np.zeros(d.size)
    times = []
    while len(times) < n_events:
        lam_bar = g * (c + decay.sum())
        w = rng.exponential(1.0 / lam_bar)
        decay = decay * np.exp(-a * w)
        t += w
        lam = g * (c + decay.sum())
        if rng.random() * lam_bar <= lam:
            times.append(t)
            decay = decay + d
    return np.asarray(times)


def dense_sufficient_stats(X, durations, jump_rows, h_at_jumps):
    """Explicit dense-matrix construction of Phi'Gamma and Phi'Sigma Phi."""
    Sigma = np.diag(durations)
    M = X.T @ Sigma @ X
    gamma = np.zeros(X.shape[0])
    gamma[jump_rows] = 1.0 / h_at_jumps
    v = X.T @ gamma
    return v, M


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
