"""Compiled DCC-GARCH recursion, shared by the simulator and the filter.

One kernel runs both modes: ``generate=True`` draws innovations and fills the
loss panel; ``generate=False`` replays the recursion on a given panel.  The
state-update arithmetic is therefore literally the same code in both modes,
which is what makes the filter reproduce the simulator's conditional moments
bit for bit on a no-break panel.

The correlation recursion consumes the devolatilized losses eps = W/D rather
than the raw innovation draws; the two differ only by rounding, and using
W/D keeps simulation and filtering on one arithmetic path.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["dcc_core"]


@njit(cache=True)
def _cholesky_lower(r, L):
    """Lower Cholesky factor of r into L; returns False if not positive definite."""
    d = r.shape[0]
    for i in range(d):
        for j in range(i + 1):
            s = r[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return False
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return True


@njit(cache=True)
def dcc_core(
    generate,
    w,
    z,
    chi,
    nu,
    gaussian,
    omega,
    alpha_g,
    beta_g_pre,
    beta_g_post,
    alpha_q,
    beta_q_pre,
    beta_q_post,
    qbar,
    post_from,
    d_out,
    r_out,
):
    """Run T steps of the DCC recursion; returns 0 on success, 1 on a PD failure.

    State starts at the pre-break unconditional variance and correlation.  The
    transition into step t uses post-break persistences iff t >= post_from.
    With ``generate`` the innovation draws z (and chi for finite nu) are
    consumed and w is written; otherwise w is read as the observed panel.
    ``d_out``/``r_out`` receive the conditional standard deviations and
    correlations that stand at the start of each step (forecasts for step t).
    """
    T, d = w.shape
    d2 = np.empty(d)
    q = np.empty((d, d))
    L = np.empty((d, d))
    eps = np.empty(d)
    for i in range(d):
        d2[i] = omega[i] / (1.0 - alpha_g[i] - beta_g_pre[i])
    for i in range(d):
        for j in range(d):
            q[i, j] = qbar[i, j]

    for t in range(T):
        post = t >= post_from
        if t > 0:
            for i in range(d):
                bg = beta_g_post[i] if post else beta_g_pre[i]
                d2[i] = omega[i] + alpha_g[i] * w[t - 1, i] * w[t - 1, i] + bg * d2[i]
            bq = beta_q_post if post else beta_q_pre
            one = 1.0 - alpha_q - bq
            for i in range(d):
                for j in range(d):
                    q[i, j] = qbar[i, j] * one + alpha_q * eps[i] * eps[j] + bq * q[i, j]
        for i in range(d):
            d_out[t, i] = np.sqrt(d2[i])
        for i in range(d):
            for j in range(d):
                r_out[t, i, j] = q[i, j] / np.sqrt(q[i, i] * q[j, j])
        if generate:
            if not _cholesky_lower(r_out[t], L):
                return 1
            if gaussian:
                fac = 1.0
            else:
                fac = np.sqrt((nu - 2.0) / chi[t])
            for i in range(d):
                s = 0.0
                for k in range(i + 1):
                    s += L[i, k] * z[t, k]
                w[t, i] = d_out[t, i] * (s * fac)
        for i in range(d):
            eps[i] = w[t, i] / d_out[t, i]
    return 0
