"""Optional fused inner loops for the batch decoder.

The numpy fallback in ``reference.decode_batch`` makes roughly ten full
passes over the working set per flip round.  When numba is importable the
two kernels below compute the same quantities in single passes over
contiguous rows.  Both follow the fallback's arithmetic operation for
operation — integer gather/xor reductions, then the flip metric staged as
channel term, ``+w*degree``, ``-2w*count``, ``+noise`` — and numba's
default strict-IEEE mode (no fastmath, no mul/add contraction) keeps the
float64 results bit-identical, so decoding trajectories do not depend on
which path runs.  Tests assert that equality directly.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def syndrome_select(XB, rect, syn, done):
    """Fill ``syn[i, b]`` with the parity of check ``i`` in frame ``b``.

    ``done[b]`` is set when every check of frame ``b`` is satisfied.
    """
    m, d = rect.shape
    B = XB.shape[1]
    for b in range(B):
        done[b] = True
    for i in range(m):
        row = syn[i]
        src = XB[rect[i, 0]]
        for b in range(B):
            row[b] = src[b]
        for j in range(1, d):
            src = XB[rect[i, j]]
            for b in range(B):
                row[b] ^= src[b]
        for b in range(B):
            if row[b]:
                done[b] = False


@njit(cache=True)
def count_flip(XB, YT, syn, col_rect, wdeg, w2, theta, pool, shift):
    """One flip round over every frame column.

    For each symbol ``k`` the unsatisfied-check count is accumulated from
    ``syn`` and the decision bit flips where the staged metric falls
    strictly below ``theta``.  ``pool`` holds pre-scaled noise words;
    symbol ``k`` reads circular register ``(k - shift) mod len(pool)``.
    """
    n, d = col_rect.shape
    B = XB.shape[1]
    depth = pool.shape[0]
    cnt = np.empty(B, np.int64)
    for k in range(n):
        for b in range(B):
            cnt[b] = 0
        for j in range(d):
            src = syn[col_rect[k, j]]
            for b in range(B):
                cnt[b] += src[b]
        wk = wdeg[k]
        yrow = YT[k]
        xrow = XB[k]
        row = k - shift
        if row < 0:
            row += depth
        prow = pool[row]
        for b in range(B):
            t = (1.0 - 2.0 * xrow[b]) * yrow[b]
            t = t + wk
            t = t - cnt[b] * w2
            t = t + prow[b]
            if t < theta:
                xrow[b] = np.uint8(xrow[b] ^ 1)
