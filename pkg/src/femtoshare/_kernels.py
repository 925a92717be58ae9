"""Hot Monte-Carlo reduction kernels.

The per-trial interference sum over every access point dominates simulator
runtime.  It is compiled with numba when available; setting the
environment variable ``FEMTOSHARE_NO_NUMBA=1`` (or a failed numba import)
selects a vectorized pure-numpy fallback.  Both paths compute the same
reduction; only float summation order differs.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["USE_NUMBA", "outage_count", "outage_count_numpy"]


def _numpy_outage_count(sig, fixed, hq, p_coef, px, py, ux, uy,
                        half_alpha, masks, rb, gamma, min_d2, skip):
    d2 = (px - ux[:, None]) ** 2 + (py - uy[:, None]) ** 2
    np.maximum(d2, min_d2, out=d2)
    active = masks[:, rb].T.astype(float)
    if skip >= 0:
        active[:, skip] = 0.0
    interf = fixed + np.einsum("tn,tn,n,tn->t", hq, d2 ** (-half_alpha),
                               p_coef, active)
    return int(np.count_nonzero((interf > 0.0) & (sig < gamma * interf)))


def _loop_outage_count(sig, fixed, hq, p_coef, px, py, ux, uy,
                       half_alpha, masks, rb, gamma, min_d2, skip):
    n_trials = sig.shape[0]
    n_fap = px.shape[0]
    count = 0
    for t in range(n_trials):
        acc = fixed[t]
        r = rb[t]
        for i in range(n_fap):
            if i == skip or not masks[i, r]:
                continue
            dx = px[i] - ux[t]
            dy = py[i] - uy[t]
            d2 = dx * dx + dy * dy
            if d2 < min_d2:
                d2 = min_d2
            acc += p_coef[i] * hq[t, i] * d2 ** (-half_alpha)
        if acc > 0.0 and sig[t] < gamma * acc:
            count += 1
    return count


def _want_numba() -> bool:
    return os.environ.get("FEMTOSHARE_NO_NUMBA", "").strip() not in ("1", "true", "yes")


USE_NUMBA = False
outage_count_numpy = _numpy_outage_count

if _want_numba():
    try:
        from numba import njit

        outage_count = njit(_loop_outage_count, cache=True, fastmath=False)
        USE_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        outage_count = _numpy_outage_count
else:
    outage_count = _numpy_outage_count
