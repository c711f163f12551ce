"""PDP peak extraction, spectrum checks and link-level metrics."""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import signal

SPEED_OF_LIGHT = 2.99792458e8


# --------------------------------------------------------------------------
# multipath extraction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MultipathEstimate:
    delay_ns: float
    relative_power_db: float


def _profile(pdp):
    if pdp.amplitudes is not None:
        return np.asarray(pdp.amplitudes)
    return np.sqrt(pdp.powers)


def _fit_paths(amps, kernel, cands, thr_rel):
    """Least-squares path amplitudes on a fixed delay support, pruning the
    paths that fall below ``thr_rel`` (linear power) of the strongest."""
    cands = list(cands)
    while cands:
        A = np.stack([np.roll(kernel, c) for c in cands], axis=1)
        h, *_ = np.linalg.lstsq(A.astype(amps.dtype), amps, rcond=None)
        p = np.abs(h) ** 2
        keep = p >= thr_rel * p.max()
        if keep.all():
            return cands, h
        cands = [c for c, k in zip(cands, keep) if k]
    return [], np.zeros(0)


def detect_peaks(pdp, threshold_db=-15.0, min_separation_ns=None):
    """Multipath components of an undilated PDP.

    When the PDP carries the sounder's single-path response (``kernel``),
    candidate delays are the apexes of the amplitude profile, i.e. local
    maxima of its negative second difference, which often survive where the
    power profile shows only a knee.  Path amplitudes then
    come from a joint least-squares fit of shifted copies of the response;
    paths whose apex is masked by a stronger neighbour are then added one at
    a time from the fit residual until it drops below the threshold.
    Without a kernel, plain local maxima of the power profile are used.

    Candidates below ``threshold_db`` of the global maximum, or closer than
    ``min_separation_ns`` to a stronger one, are discarded.  The default
    separation is half a chip.
    """
    if pdp.dilated:
        raise ValueError("detect_peaks expects an undilated PDP")
    if threshold_db >= 0:
        raise ValueError("threshold_db must be negative")
    p = pdp.powers
    if p.size == 0 or p.max() <= 0:
        raise ValueError("no peaks: PDP is empty or all zero")
    step_ns = pdp.time_step_s * 1e9
    if min_separation_ns is None:
        min_separation_ns = 0.5 * pdp.chip_period_s * 1e9 if pdp.chip_period_s else 0.0
    min_sep = max(1, int(math.floor(min_separation_ns / step_ns + 1e-9)))
    thr = 10 ** (threshold_db / 10)
    n = p.size

    kernel = pdp.kernel
    if kernel is None or kernel.size != n:
        idx, _ = signal.find_peaks(np.concatenate([p[-1:], p, p[:1]]),
                                   height=thr * p.max(), distance=min_sep)
        idx = np.unique((idx - 1) % n)
        h2 = p[idx]
        return _estimates(idx, h2, step_ns)

    amps = _profile(pdp)
    mag = np.abs(amps)
    curv = 2 * mag - np.roll(mag, 1) - np.roll(mag, -1)
    # a path at the threshold level bends the profile by this much at its apex
    apex = abs(kernel[0]) * 2 - abs(kernel[1]) - abs(kernel[-1])
    min_curv = 0.5 * math.sqrt(thr) * mag.max() * apex
    is_apex = (curv > min_curv) & (curv >= np.roll(curv, 1)) & (curv >= np.roll(curv, -1))
    is_apex &= mag ** 2 >= thr * p.max()
    order = np.flatnonzero(is_apex)
    order = order[np.argsort(-curv[order], kind="stable")]

    def clear(c, taken):
        return all(min((c - k) % n, (k - c) % n) >= min_sep for k in taken)

    chosen = []
    for c in order:
        if clear(c, chosen):
            chosen.append(int(c))
    if not chosen:
        chosen = [int(np.argmax(mag))]
    cands, h = _fit_paths(amps, kernel, chosen, thr)

    # a weak path one chip behind a strong one can cancel the strong path's
    # foot corner and show no apex at all; pick such paths off the residual
    floor = thr * p.max()
    for _ in range(n):
        A = np.stack([np.roll(kernel, c) for c in cands], axis=1)
        resid = np.abs(amps - A.astype(amps.dtype) @ h) ** 2
        lags = np.arange(n)
        free = np.ones(n, dtype=bool)
        for c in cands:
            d = (lags - c) % n
            free &= np.minimum(d, n - d) >= min_sep
        if not free.any():
            break
        j = int(np.flatnonzero(free)[np.argmax(resid[free])])
        if resid[j] < floor:
            break
        grown, h_new = _fit_paths(amps, kernel, cands + [j], thr)
        if j not in grown:
            break
        cands, h = grown, h_new
    if not cands:
        raise ValueError("no peaks above threshold")
    return _estimates(np.array(cands), np.abs(h) ** 2, step_ns)


def _estimates(idx, h2, step_ns):
    order = np.argsort(idx)
    top = h2.max()
    return [MultipathEstimate(float(idx[i] * step_ns), float(10 * np.log10(h2[i] / top)))
            for i in order]


# --------------------------------------------------------------------------
# spectrum
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Psd:
    freqs_hz: np.ndarray
    power_db: np.ndarray


def power_spectrum(w, resolution_hz):
    """Averaged periodogram, rectangular window, 50 % overlap, 0 dB peak.

    Segment length is ``sample_rate / resolution_hz``.  Real inputs give a
    one-sided spectrum, complex inputs a two-sided one in ascending order.
    """
    fs = w.sample_rate_hz
    nperseg = int(round(fs / resolution_hz))
    x = np.asarray(w.samples)
    if nperseg < 2 or x.size < nperseg:
        raise ValueError(f"need at least {nperseg} samples for {resolution_hz} Hz resolution, "
                         f"got {x.size}")
    complex_in = np.iscomplexobj(x)
    f, pxx = signal.welch(x, fs=fs, window="boxcar", nperseg=nperseg,
                          noverlap=nperseg // 2, detrend=False,
                          return_onesided=not complex_in, scaling="spectrum")
    if complex_in:
        f, pxx = np.fft.fftshift(f), np.fft.fftshift(pxx)
    top = pxx.max()
    if top <= 0:
        raise ValueError("waveform has no power")
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(pxx / top)
    return Psd(f, db)


def find_null_and_sidelobe(psd, floor_db=-20.0, hysteresis_db=3.0):
    """First spectral null above the main lobe and the next lobe's peak.

    The null is the minimum of the first stretch that dips below
    ``floor_db``; the stretch ends once the level climbs back above
    ``floor_db + hysteresis_db``, which keeps estimator ripple near the null
    from splitting it.  Returns ``(null_hz, sidelobe_db)`` with the sidelobe
    relative to the main-lobe peak.
    """
    pos = psd.freqs_hz >= 0
    f = psd.freqs_hz[pos]
    db = psd.power_db[pos]
    start = int(np.argmax(db))
    main = db[start]

    below = np.flatnonzero(db[start:] < main + floor_db)
    if below.size == 0:
        raise ValueError("no spectral null found within the frequency grid")
    enter = start + below[0]
    above = np.flatnonzero(db[enter:] > main + floor_db + hysteresis_db)
    leave = enter + above[0] if above.size else db.size
    null = enter + int(np.argmin(db[enter:leave]))
    if leave >= db.size:
        raise ValueError("no sidelobe found after the first null")
    again = np.flatnonzero(db[leave:] < main + floor_db)
    end = leave + again[0] if again.size else db.size
    side = float(db[leave:end].max() - main)
    return float(f[null]), side


# --------------------------------------------------------------------------
# path loss, XPD, calibration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkBudget:
    ptx_dbm: float
    gtx_dbi: float
    grx_dbi: float
    fc_hz: float
    distance_m: float

    def __post_init__(self):
        if not self.distance_m > 0:
            raise ValueError("distance_m must be positive")
        if not self.fc_hz > 0:
            raise ValueError("fc_hz must be positive")


def path_loss(budget, prx_dbm):
    return budget.ptx_dbm - prx_dbm + budget.gtx_dbi + budget.grx_dbi


def fspl(distance_m, fc_hz):
    """Free-space path loss in dB (Friis)."""
    if not distance_m > 0:
        raise ValueError("distance must be positive")
    return 20 * math.log10(4 * math.pi * distance_m * fc_hz / SPEED_OF_LIGHT)


def fit_ple(records, d0_m=1.0, fc_hz=142e9):
    """Close-in path-loss exponent with the intercept pinned to FSPL(d0).

    ``records`` are ``(distance_m, pl_db)`` pairs.  Returns ``(n, rmse_db)``.
    """
    d = np.array([r[0] for r in records], dtype=float)
    pl = np.array([r[1] for r in records], dtype=float)
    if np.unique(d).size < 2:
        raise ValueError("PLE fit needs at least two distinct distances")
    if np.any(d <= d0_m):
        raise ValueError(f"all distances must exceed d0 = {d0_m} m")
    x = 10 * np.log10(d / d0_m)
    y = pl - fspl(d0_m, fc_hz)
    n = float(x @ y / (x @ x))
    rmse = float(np.sqrt(np.mean((y - n * x) ** 2)))
    return n, rmse


@dataclass(frozen=True)
class XpdRecord:
    distance_m: float
    pl_vv_db: float
    pl_vh_db: float

    def __post_init__(self):
        if self.pl_vh_db < self.pl_vv_db:
            warnings.warn(f"cross-polarised loss below co-polarised at {self.distance_m} m",
                          stacklevel=2)


def xpd(record):
    """XPD in dB, positive when the cross-polarised link is weaker."""
    return record.pl_vh_db - record.pl_vv_db


def xpd_stats(records):
    """Mean and sample (n - 1) standard deviation of XPD over ``records``."""
    values = np.array([xpd(r) for r in records], dtype=float)
    if values.size < 2:
        raise ValueError("XPD statistics need at least two records")
    return float(values.mean()), float(values.std(ddof=1))


@dataclass(frozen=True)
class LinearityResult:
    slope: float
    max_deviation_db: float
    linear: bool


def linearity_check(sweep, slope_tolerance=0.05):
    """Regress measured power on negative attenuation.

    ``sweep`` holds ``(attenuation_db, measured_power_dbm)`` pairs.  The
    range counts as linear when the slope is within ``slope_tolerance`` of 1.
    """
    if len(sweep) < 3:
        raise ValueError("linearity check needs at least 3 sweep points")
    att = np.array([s[0] for s in sweep], dtype=float)
    y = np.array([s[1] for s in sweep], dtype=float)
    x = -att
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    slope = float(slope)
    return LinearityResult(slope, float(np.abs(resid).max()),
                           abs(slope - 1) <= slope_tolerance)
