"""Streaming single-pass recursions over event and covariate timelines.

These are the hot loops behind estimation and likelihood evaluation.  They
never materialize anything of size m x K; the covariate path enters only
through the piecewise-constant scalar g(t) evaluated per update row.
Compiled with numba; all times are float seconds.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def decay_sums(times, a):
    """S[i, l] = sum_{j < i} exp(-a_l (t_i - t_j)) by exact recursion."""
    n = times.shape[0]
    L = a.shape[0]
    S = np.zeros((n, L))
    for l in range(L):
        s = 0.0
        for i in range(n):
            if i > 0:
                s = (s + 1.0) * np.exp(-a[l] * (times[i] - times[i - 1]))
            S[i, l] = s
    return S


@njit(cache=True, inline="always")
def _segment_sq(c, D, a, tau):
    """Integral of (c + sum_l D_l exp(-a_l u))^2 over u in [0, tau]."""
    L = D.shape[0]
    out = c * c * tau
    for l in range(L):
        out += 2.0 * c * D[l] * (1.0 - np.exp(-a[l] * tau)) / a[l]
        for k in range(L):
            s = a[l] + a[k]
            out += D[l] * D[k] * (1.0 - np.exp(-s * tau)) / s
    return out


@njit(cache=True, inline="always")
def _segment_lin(c, D, a, tau):
    """Integral of c + sum_l D_l exp(-a_l u) over u in [0, tau]."""
    out = c * tau
    for l in range(D.shape[0]):
        out += D[l] * (1.0 - np.exp(-a[l] * tau)) / a[l]
    return out


@njit(cache=True)
def quad_loss_terms(event_times, upd_times, g_vals, c, d, a, D0, t0, t1):
    """One pass over [t0, t1] returning (sum of h(T_i) g(T_i), int (hg)^2).

    g takes value g_vals[j] on (upd_times[j-1], upd_times[j]] with the first
    interval opening at t0; upd_times[-1] must be >= t1 coverage is the
    caller's job.  Events must lie in (t0, t1] and be covered by the grid.
    D0 is the decay state at t0 from any earlier history.
    """
    n = event_times.shape[0]
    m = upd_times.shape[0]
    L = a.shape[0]
    D = D0.copy()
    prev = t0
    i = 0
    sum_hg = 0.0
    int_sq = 0.0
    for j in range(m):
        tj = upd_times[j]
        if tj > t1:
            tj = t1
        g = g_vals[j]
        while i < n and event_times[i] <= tj:
            te = event_times[i]
            tau = te - prev
            if tau > 0.0:
                int_sq += g * g * _segment_sq(c, D, a, tau)
                for l in range(L):
                    D[l] *= np.exp(-a[l] * tau)
            h = c
            for l in range(L):
                h += D[l]
            sum_hg += h * g
            for l in range(L):
                D[l] += d[l]
            prev = te
            i += 1
        if tj > prev:
            tau = tj - prev
            int_sq += g * g * _segment_sq(c, D, a, tau)
            for l in range(L):
                D[l] *= np.exp(-a[l] * tau)
            prev = tj
        if prev >= t1:
            break
    return sum_hg, int_sq


@njit(cache=True)
def loglik_pass(event_times, upd_times, g_vals, c, d, a, D0, t0, t1, floor):
    """Exact log-likelihood pieces for lambda = h * g over (t0, t1].

    Returns (lambda at each event, compensator increments, status).  The
    increments array has n + 1 entries: t0 -> T_1, between successive events,
    and T_n -> t1.  With ``floor`` > 0 each value and each segment integral
    is floored (per-segment max; the floor is near machine epsilon so the
    crossing error is negligible).  status = 1 flags a nonpositive intensity
    at an event when no floor is set.
    """
    n = event_times.shape[0]
    m = upd_times.shape[0]
    L = a.shape[0]
    D = D0.copy()
    prev = t0
    i = 0
    lam = np.zeros(n)
    comp = np.zeros(n + 1)
    status = 0
    for j in range(m):
        tj = upd_times[j]
        if tj > t1:
            tj = t1
        g = g_vals[j]
        while i < n and event_times[i] <= tj:
            te = event_times[i]
            tau = te - prev
            if tau > 0.0:
                seg = g * _segment_lin(c, D, a, tau)
                if floor > 0.0 and seg < floor * tau:
                    seg = floor * tau
                comp[i] += seg
                for l in range(L):
                    D[l] *= np.exp(-a[l] * tau)
            h = c
            for l in range(L):
                h += D[l]
            li = h * g
            if li <= 0.0:
                if floor > 0.0:
                    li = floor
                else:
                    status = 1
            elif floor > 0.0 and li < floor:
                li = floor
            lam[i] = li
            for l in range(L):
                D[l] += d[l]
            prev = te
            i += 1
        if tj > prev:
            tau = tj - prev
            seg = g * _segment_lin(c, D, a, tau)
            if floor > 0.0 and seg < floor * tau:
                seg = floor * tau
            comp[i] += seg
            for l in range(L):
                D[l] *= np.exp(-a[l] * tau)
            prev = tj
        if prev >= t1:
            break
    return lam, comp, status


@njit(cache=True)
def env_loglik_pass(event_times, upd_times, g_vals, t0, t1, floor):
    """Same as loglik_pass for the no-excitation model lambda = g."""
    n = event_times.shape[0]
    m = upd_times.shape[0]
    prev = t0
    i = 0
    lam = np.zeros(n)
    comp = np.zeros(n + 1)
    status = 0
    for j in range(m):
        tj = upd_times[j]
        if tj > t1:
            tj = t1
        g = g_vals[j]
        while i < n and event_times[i] <= tj:
            te = event_times[i]
            tau = te - prev
            if tau > 0.0:
                seg = g * tau
                if floor > 0.0 and seg < floor * tau:
                    seg = floor * tau
                comp[i] += seg
            li = g
            if li <= 0.0:
                if floor > 0.0:
                    li = floor
                else:
                    status = 1
            elif floor > 0.0 and li < floor:
                li = floor
            lam[i] = li
            prev = te
            i += 1
        if tj > prev:
            tau = tj - prev
            seg = g * tau
            if floor > 0.0 and seg < floor * tau:
                seg = floor * tau
            comp[i] += seg
            prev = tj
        if prev >= t1:
            break
    return lam, comp, status
