"""Compiled per-window statistic kernels and trace drivers.

Every rolling-window statistic is computed by exactly one kernel here, with
explicit sequential accumulation (no pairwise summation), so that

* the offline trace driver and the online monitor produce bit-identical
  detector values, and
* small-window unit tests can check the kernels against straight-line
  pure-Python reference implementations for exact float equality.

All kernels are single-threaded; callers own any parallelism decisions.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "v_stat",
    "gini_stat",
    "ks_stat",
    "hong_stat",
    "combine_stats",
    "trace_binary_stream",
    "trace_pit_stream",
    "binary_window_raws",
    "pit_window_raws",
    "binary_null_raws",
    "pit_null_raws",
    "binary_sup_pairs",
    "pit_sup_pairs",
]


@njit(cache=True)
def v_stat(x, start, m, target):
    """Absolute deviation of the window mean from its null target."""
    acc = 0.0
    for i in range(start, start + m):
        acc += x[i]
    return abs(acc / m - target)


@njit(cache=True)
def gini_stat(x, start, m, dur):
    """Gini coefficient of inter-violation durations within one window.

    Durations are measured from the notional origin one step before the
    window (the first duration is position + 1); the open gap after the last
    violation is discarded.  Windows with fewer than two violations return 0.
    ``dur`` is an int64 scratch buffer of length >= m.
    """
    cnt = 0
    prev = -1
    for i in range(m):
        if x[start + i] > 0.0:
            dur[cnt] = i - prev
            prev = i
            cnt += 1
    if cnt <= 1:
        return 0.0
    pair = np.int64(0)
    for a in range(cnt):
        da = dur[a]
        for b in range(cnt):
            d = da - dur[b]
            if d < 0:
                d = -d
            pair += d
    total = np.int64(0)
    for a in range(cnt):
        total += dur[a]
    return (pair / (cnt * cnt)) / (2.0 * (total / cnt))


@njit(cache=True)
def ks_stat(x, start, m, alpha, beta, buf):
    """Exact Kolmogorov-Smirnov distance to the null law of violation values.

    The null distribution function has an atom at zero and is linear on
    (0, 1]: H(v) = (v*(1-alpha)+alpha)*(1-beta)+beta.  The supremum over the
    mixed distribution is attained at a sample point from above or below, so
    both one-sided candidates are evaluated at run boundaries of the sorted
    window.  ``buf`` is a float64 scratch buffer of length >= m.
    """
    for i in range(m):
        buf[i] = x[start + i]
    sub = buf[:m]
    sub.sort()
    best = 0.0
    for i in range(m):
        v = sub[i]
        if i == m - 1 or sub[i + 1] != v:
            h = (v * (1.0 - alpha) + alpha) * (1.0 - beta) + beta
            d = (i + 1) / m - h
            if d < 0.0:
                d = -d
            if d > best:
                best = d
        if i == 0 or sub[i - 1] != v:
            if v <= 0.0:
                hl = 0.0
            else:
                hl = (v * (1.0 - alpha) + alpha) * (1.0 - beta) + beta
            d = i / m - hl
            if d < 0.0:
                d = -d
            if d > best:
                best = d
    return best


@njit(cache=True)
def hong_stat(x, start, m, kappa2, cbuf):
    """Kernel-weighted portmanteau statistic over all window autocorrelations.

    ``kappa2[j]`` holds the squared Daniell-type kernel weight for lag j
    (precomputed once per window length); autocovariances use the in-window
    mean and an m-denominator.  A constant window returns 0 by convention —
    checked on the values themselves, not on the float sample variance, which
    can round away from zero for non-representable constants.  ``cbuf`` is a
    float64 scratch buffer of length >= m.
    """
    const = True
    for i in range(start + 1, start + m):
        if x[i] != x[start]:
            const = False
            break
    if const:
        return 0.0
    acc = 0.0
    for i in range(start, start + m):
        acc += x[i]
    mean = acc / m
    for i in range(m):
        cbuf[i] = x[start + i] - mean
    g0 = 0.0
    for t in range(m):
        g0 += cbuf[t] * cbuf[t]
    g0 = g0 / m
    stat = 0.0
    for j in range(1, m):
        accj = 0.0
        for t in range(j, m):
            accj += cbuf[t] * cbuf[t - j]
        gj = accj / m
        if g0 == 0.0:
            rho = 0.0
        else:
            rho = gj / g0
        stat += kappa2[j] * (rho * rho)
    return m * stat


@njit(cache=True)
def combine_stats(raw_uc, raw_iid, mean_uc, var_uc, mean_iid, var_iid, a):
    """Weighted sum of the two standardized window statistics."""
    z_uc = (raw_uc - mean_uc) / np.sqrt(var_uc)
    z_iid = (raw_iid - mean_iid) / np.sqrt(var_iid)
    return a * z_uc + (1.0 - a) * z_iid


@njit(cache=True)
def binary_window_raws(x, start, m, target, dur):
    """(coverage, clustering) raw statistics for one binary window."""
    return v_stat(x, start, m, target), gini_stat(x, start, m, dur)


@njit(cache=True)
def pit_window_raws(x, start, m, alpha, beta, kappa2, buf, cbuf):
    """(distribution, autocorrelation) raw statistics for one value window."""
    return ks_stat(x, start, m, alpha, beta, buf), hong_stat(x, start, m, kappa2, cbuf)


@njit(cache=True)
def trace_binary_stream(x, m, target, mean_uc, var_uc, mean_iid, var_iid, a, out):
    """Detector values for every window end T = m..n of one binary stream."""
    n = x.shape[0]
    dur = np.empty(m, np.int64)
    for w in range(n - m + 1):
        raw_uc, raw_iid = binary_window_raws(x, w, m, target, dur)
        out[w] = combine_stats(raw_uc, raw_iid, mean_uc, var_uc, mean_iid, var_iid, a)


@njit(cache=True)
def trace_pit_stream(x, m, alpha, beta, kappa2, mean_uc, var_uc, mean_iid, var_iid, a, out):
    """Detector values for every window end T = m..n of one value stream."""
    n = x.shape[0]
    buf = np.empty(m, np.float64)
    cbuf = np.empty(m, np.float64)
    for w in range(n - m + 1):
        raw_uc, raw_iid = pit_window_raws(x, w, m, alpha, beta, kappa2, buf, cbuf)
        out[w] = combine_stats(raw_uc, raw_iid, mean_uc, var_uc, mean_iid, var_iid, a)


@njit(cache=True)
def binary_null_raws(u1, u2, beta, alpha, joint, out_uc, out_iid):
    """Raw statistic pairs on independent null windows of a binary stream.

    ``u1``/``u2`` hold uniforms with one window per row.  ``joint`` selects
    the two-condition stream 1{u1 > beta, u2 > alpha} (target (1-alpha)(1-beta));
    otherwise the marginal stream 1{u1 > beta} is used.
    """
    b0, m = u1.shape
    w = np.empty(m, np.float64)
    dur = np.empty(m, np.int64)
    if joint:
        target = (1.0 - alpha) * (1.0 - beta)
    else:
        target = 1.0 - beta
    for r in range(b0):
        for i in range(m):
            if joint:
                w[i] = 1.0 if (u1[r, i] > beta and u2[r, i] > alpha) else 0.0
            else:
                w[i] = 1.0 if u1[r, i] > beta else 0.0
        out_uc[r], out_iid[r] = binary_window_raws(w, 0, m, target, dur)


@njit(cache=True)
def pit_null_raws(u1, u2, beta, alpha, kappa2, out_uc, out_iid):
    """Raw statistic pairs on independent null windows of the value stream."""
    b0, m = u1.shape
    w = np.empty(m, np.float64)
    buf = np.empty(m, np.float64)
    cbuf = np.empty(m, np.float64)
    for r in range(b0):
        for i in range(m):
            if u1[r, i] > beta and u2[r, i] > alpha:
                w[i] = (u2[r, i] - alpha) / (1.0 - alpha)
            else:
                w[i] = 0.0
        out_uc[r], out_iid[r] = pit_window_raws(w, 0, m, alpha, beta, kappa2, buf, cbuf)


@njit(cache=True)
def binary_sup_pairs(u1, u2, m, beta, alpha, mom_var, mom_sys, a,
                     out_var, out_sys):
    """Paired running-maximum detector values on simulated null panels.

    One row of ``u1``/``u2`` is one panel of length n.  The marginal stream is
    1{u1 > beta}; the joint stream is 1{u1 > beta, u2 > alpha}.  The null law
    of the pair is the same whichever series plays the conditioning role, so
    one driver serves both directional measures.  ``mom_var``/``mom_sys`` hold
    (mean_uc, var_uc, mean_iid, var_iid).
    """
    reps, n = u1.shape
    xv = np.empty(n, np.float64)
    xs = np.empty(n, np.float64)
    dur = np.empty(m, np.int64)
    tv = 1.0 - beta
    ts = (1.0 - alpha) * (1.0 - beta)
    for r in range(reps):
        for i in range(n):
            hit1 = u1[r, i] > beta
            xv[i] = 1.0 if hit1 else 0.0
            xs[i] = 1.0 if (hit1 and u2[r, i] > alpha) else 0.0
        sup_v = -np.inf
        sup_s = -np.inf
        for w in range(n - m + 1):
            ru, ri = binary_window_raws(xv, w, m, tv, dur)
            dv = combine_stats(ru, ri, mom_var[0], mom_var[1], mom_var[2], mom_var[3], a)
            if dv > sup_v:
                sup_v = dv
            ru, ri = binary_window_raws(xs, w, m, ts, dur)
            ds = combine_stats(ru, ri, mom_sys[0], mom_sys[1], mom_sys[2], mom_sys[3], a)
            if ds > sup_s:
                sup_s = ds
        out_var[r] = sup_v
        out_sys[r] = sup_s


@njit(cache=True)
def pit_sup_pairs(u1, u2, m, beta, alpha, kappa2, mom_var, mom_sys, a,
                  out_var, out_sys):
    """Paired running-maximum detector values for the value-stream measures."""
    reps, n = u1.shape
    xv = np.empty(n, np.float64)
    xs = np.empty(n, np.float64)
    dur = np.empty(m, np.int64)
    buf = np.empty(m, np.float64)
    cbuf = np.empty(m, np.float64)
    tv = 1.0 - beta
    for r in range(reps):
        for i in range(n):
            hit1 = u1[r, i] > beta
            xv[i] = 1.0 if hit1 else 0.0
            if hit1 and u2[r, i] > alpha:
                xs[i] = (u2[r, i] - alpha) / (1.0 - alpha)
            else:
                xs[i] = 0.0
        sup_v = -np.inf
        sup_s = -np.inf
        for w in range(n - m + 1):
            ru, ri = binary_window_raws(xv, w, m, tv, dur)
            dv = combine_stats(ru, ri, mom_var[0], mom_var[1], mom_var[2], mom_var[3], a)
            if dv > sup_v:
                sup_v = dv
            ru, ri = pit_window_raws(xs, w, m, alpha, beta, kappa2, buf, cbuf)
            ds = combine_stats(ru, ri, mom_sys[0], mom_sys[1], mom_sys[2], mom_sys[3], a)
            if ds > sup_s:
                sup_s = ds
        out_var[r] = sup_v
        out_sys[r] = sup_s
