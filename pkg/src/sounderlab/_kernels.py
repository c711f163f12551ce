"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a loop form that numba compiles, and a pure
numpy/Python form used when numba is missing or disabled.  Set
``SOUNDERLAB_DISABLE_NUMBA=1`` before import to force the fallback path.
Both paths must agree bit for bit on integer kernels and to rounding on
float kernels; ``tests/test_kernels.py`` checks this.
"""

import os

import numpy as np


def _have_numba():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _have_numba() and os.environ.get("SOUNDERLAB_DISABLE_NUMBA", "") in ("", "0")

if USE_NUMBA:
    from numba import njit
else:  # pragma: no cover - exercised only without numba
    njit = None


# --------------------------------------------------------------------------
# LFSR
# --------------------------------------------------------------------------

def _lfsr_run_loop(tap_mask, n_stages, seed, length):
    out = np.empty(length, dtype=np.uint8)
    state = seed
    top = n_stages - 1
    for i in range(length):
        out[i] = state & 1
        fb = 0
        m = state & tap_mask
        while m:
            fb ^= 1
            m &= m - 1
        state = (state >> 1) | (fb << top)
    return out


def _lfsr_period_loop(tap_mask, n_stages, seed, limit):
    state = seed
    top = n_stages - 1
    for step in range(1, limit + 1):
        m = state & tap_mask
        fb = 0
        while m:
            fb ^= 1
            m &= m - 1
        state = (state >> 1) | (fb << top)
        if state == seed:
            return step
    return -1


def _lfsr_run_py(tap_mask, n_stages, seed, length):
    out = np.empty(length, dtype=np.uint8)
    state = int(seed)
    top = n_stages - 1
    for i in range(length):
        out[i] = state & 1
        fb = bin(state & tap_mask).count("1") & 1
        state = (state >> 1) | (fb << top)
    return out


def _lfsr_period_py(tap_mask, n_stages, seed, limit):
    state = int(seed)
    top = n_stages - 1
    for step in range(1, limit + 1):
        fb = bin(state & tap_mask).count("1") & 1
        state = (state >> 1) | (fb << top)
        if state == seed:
            return step
    return -1


# --------------------------------------------------------------------------
# circular autocorrelation (brute force, integer exact)
# --------------------------------------------------------------------------

def _circ_autocorr_loop(b):
    n = b.shape[0]
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        acc = 0
        for i in range(n):
            j = i + k
            if j >= n:
                j -= n
            acc += b[i] * b[j]
        out[k] = acc
    return out


def _circ_autocorr_np(b):
    b = b.astype(np.int64)
    return np.array([np.dot(b, np.roll(b, -k)) for k in range(b.size)], dtype=np.int64)


# --------------------------------------------------------------------------
# direct sliding correlator
# --------------------------------------------------------------------------
#
# The common grid runs `hold` times faster than the received capture, which
# is sample-and-hold expanded onto it.  Grid sample n multiplies
# received[(n // hold) mod period] by slow replica chip j(n) mod L, where
# chip j starts at grid sample round(j * den / num) (den / num = grid rate
# over beta).  Equivalently
# j(n) = ((2n + 1) * num - 1) // (2 * den).  The product goes through two
# cascaded moving averages of `window` samples (a triangular window of
# 2 * window - 1 taps) and is read out centred on each of `positions`,
# which must be non-decreasing.

def _direct_loop(rx_re, rx_im, replica, num, den, hold, window, positions):
    period = rx_re.shape[0]
    n_chips = replica.shape[0]
    m = positions.shape[0]
    out_re = np.zeros(m, dtype=np.float64)
    out_im = np.zeros(m, dtype=np.float64)
    if m == 0:
        return out_re, out_im
    lo = positions[0] - (window - 1)
    hi = positions[m - 1] + window - 1
    p_re = np.zeros(window)
    p_im = np.zeros(window)
    a_re = np.zeros(window)
    a_im = np.zeros(window)
    s1_re = 0.0
    s1_im = 0.0
    s2_re = 0.0
    s2_im = 0.0
    scale = 1.0 / (window * window)
    i = 0
    for n in range(lo, hi + 1):
        q = replica[(((2 * n + 1) * num - 1) // (2 * den)) % n_chips]
        k = (n // hold) % period
        slot = (n - lo) % window
        x = rx_re[k] * q
        s1_re += x - p_re[slot]
        p_re[slot] = x
        x = rx_im[k] * q
        s1_im += x - p_im[slot]
        p_im[slot] = x
        s2_re += s1_re - a_re[slot]
        a_re[slot] = s1_re
        s2_im += s1_im - a_im[slot]
        a_im[slot] = s1_im
        centre = n - (window - 1)
        while i < m and positions[i] == centre:
            out_re[i] = s2_re * scale
            out_im[i] = s2_im * scale
            i += 1
    return out_re, out_im


def _direct_np(rx_re, rx_im, replica, num, den, hold, window, positions):
    if positions.size == 0:
        return np.zeros(0), np.zeros(0)
    lo = int(positions[0]) - (window - 1)
    hi = int(positions[-1]) + window - 1
    n = np.arange(lo, hi + 1, dtype=np.int64)
    q = replica[(((2 * n + 1) * num - 1) // (2 * den)) % replica.size]
    k = (n // hold) % rx_re.size
    out = []
    for part in (rx_re, rx_im):
        c1 = np.concatenate(([0.0], np.cumsum(part[k] * q)))
        s1 = c1[window:] - c1[:-window]          # sums ending at n = lo + window - 1 + i
        c2 = np.concatenate(([0.0], np.cumsum(s1)))
        s2 = c2[window:] - c2[:-window]          # ends at n = lo + 2 * window - 2 + i
        out.append(s2[positions - positions[0]] / (window * window))
    return out[0], out[1]


if USE_NUMBA:
    lfsr_run = njit(cache=True)(_lfsr_run_loop)
    lfsr_period = njit(cache=True)(_lfsr_period_loop)
    circ_autocorr = njit(cache=True)(_circ_autocorr_loop)
    direct_correlate = njit(cache=True)(_direct_loop)
else:  # pragma: no cover
    lfsr_run = _lfsr_run_py
    lfsr_period = _lfsr_period_py
    circ_autocorr = _circ_autocorr_np
    direct_correlate = _direct_np

# the fallbacks, always importable for equivalence tests and benchmarks
numpy_impl = {
    "lfsr_run": _lfsr_run_py,
    "lfsr_period": _lfsr_period_py,
    "circ_autocorr": _circ_autocorr_np,
    "direct_correlate": _direct_np,
}
