"""Sliding correlator: clock bookkeeping, correlation and undilation.

Two correlators produce the same time-dilated PDP.  ``sliding_correlate_direct``
simulates the hardware on a common sample grid (received signal times a slow
replica, then a moving-average low-pass) and is only practical for small
``L * oversample * gamma``.  ``sliding_correlate_fast`` computes the circular
cross-correlation on the fast grid once and applies the equivalent smoothing
along the lag axis, so it scales to the 4095-chip, gamma = 20000 setup.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
import math

import numpy as np
from scipy.signal import find_peaks

from . import _kernels
from .pnseq import ChipSequence, PnConfig, generate, to_bipolar

# direct simulation budget, in grid samples
MAX_DIRECT_SAMPLES = 200_000_000


def slide_factor(alpha_hz, beta_hz):
    """Time-dilation factor ``alpha / (alpha - beta)``."""
    if not 0 < beta_hz < alpha_hz:
        raise ValueError(f"need 0 < beta < alpha, got alpha={alpha_hz}, beta={beta_hz}")
    return alpha_hz / (alpha_hz - beta_hz)


def sync_period(pn_length, alpha_hz, gamma):
    """Spacing of sync pulses in seconds: PN duration dilated by ``gamma``."""
    if pn_length < 1 or alpha_hz <= 0 or gamma < 1:
        raise ValueError("need pn_length >= 1, alpha > 0 and gamma >= 1")
    return pn_length * gamma / alpha_hz


@dataclass(frozen=True)
class SounderConfig:
    alpha_hz: float
    beta_hz: float
    pn: PnConfig
    oversample: int = 10
    lpf_cutoff_hz: float = None

    def __post_init__(self):
        slide_factor(self.alpha_hz, self.beta_hz)
        if int(self.oversample) != self.oversample or self.oversample < 2:
            raise ValueError(f"oversample must be an integer >= 2, got {self.oversample}")
        if not math.isclose(self.pn.chip_rate_hz, self.alpha_hz, rel_tol=1e-12):
            raise ValueError(f"PN chip rate {self.pn.chip_rate_hz} differs from alpha {self.alpha_hz}")
        if self.lpf_cutoff_hz is not None and not self.lpf_cutoff_hz > 0:
            raise ValueError("lpf_cutoff_hz must be positive")
        object.__setattr__(self, "oversample", int(self.oversample))

    @property
    def gamma(self):
        return slide_factor(self.alpha_hz, self.beta_hz)

    @property
    def sample_rate_hz(self):
        return self.alpha_hz * self.oversample

    @cached_property
    def sequence(self):
        return generate(self.pn)

    @property
    def pn_length(self):
        return self.sequence.length

    @property
    def period_samples(self):
        return self.pn_length * self.oversample

    @property
    def sync_period_s(self):
        return sync_period(self.pn_length, self.alpha_hz, self.gamma)

    @property
    def lpf_window(self):
        """Length of each of the two cascaded moving averages, in grid samples.

        Defaults to one PN period.  A triangular window spanning two periods
        cancels the partial-period error from the lag drifting during
        integration.  With ``lpf_cutoff_hz`` set, the window is sized so the
        filter's first spectral null sits at the cutoff.
        """
        if self.lpf_cutoff_hz is None:
            return self.period_samples
        return max(1, round(self.sample_rate_hz / self.lpf_cutoff_hz))


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples))

    def __len__(self):
        return self.samples.size

    @property
    def is_complex(self):
        return np.iscomplexobj(self.samples)

    @property
    def power(self):
        return float(np.mean(np.abs(self.samples) ** 2)) if self.samples.size else 0.0


@dataclass(frozen=True)
class Pdp:
    """Power delay profile on a uniform time axis.

    ``amplitudes`` keeps the complex correlator output (``powers`` is its
    squared magnitude).  ``kernel`` is the sounder's normalised response to a
    single clean path at zero delay, on the same lag grid; peak extraction
    uses it to separate paths closer than the correlation triangle.
    """

    powers: np.ndarray
    time_step_s: float
    gamma: float = 1.0
    dilated: bool = False
    amplitudes: np.ndarray = field(default=None, repr=False)
    kernel: np.ndarray = field(default=None, repr=False)
    chip_period_s: float = None

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=np.float64)
        if np.any(p < 0):
            raise ValueError("PDP powers must be non-negative")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if not self.time_step_s > 0:
            raise ValueError("time_step_s must be positive")
        object.__setattr__(self, "powers", p)

    def __len__(self):
        return self.powers.size

    @property
    def times(self):
        return np.arange(self.powers.size) * self.time_step_s

    @property
    def delay_step_s(self):
        """Sample spacing on the true-delay axis."""
        return self.time_step_s / self.gamma if self.dilated else self.time_step_s


@dataclass(frozen=True)
class SyncInfo:
    period_s: float
    pulse_times_s: np.ndarray


def upsample(seq, oversample, chip_rate_hz=None):
    """Rectangular pulse shaping: each bipolar chip repeated ``oversample`` times."""
    if int(oversample) != oversample or oversample < 2:
        raise ValueError("oversample must be an integer >= 2")
    if isinstance(seq, ChipSequence):
        chip_rate_hz = chip_rate_hz or seq.config.chip_rate_hz
        chips = to_bipolar(seq)
    else:
        chips = np.asarray(seq)
    if chip_rate_hz is None:
        raise ValueError("chip_rate_hz is required for a bare chip vector")
    return Waveform(np.repeat(chips.astype(np.float64), int(oversample)),
                    chip_rate_hz * oversample)


def transmit(config, n_periods=1):
    """TX baseband: the upsampled PN sequence repeated ``n_periods`` times."""
    one = upsample(config.sequence, config.oversample)
    return Waveform(np.tile(one.samples, n_periods), one.sample_rate_hz)


def discrete_correlation(s_bar, r_bar, sample_rate_hz=1.0):
    """``R_k = <s shifted by k, r>`` over circular lags ``k = 0..n-1``.

    ``r_bar`` shorter than ``s_bar`` is zero padded.  Powers are ``R_k**2``;
    no normalisation is applied.
    """
    s = np.asarray(s_bar)
    r = np.asarray(r_bar)
    if s.size == 0 or r.size == 0:
        raise ValueError("empty correlation input")
    if r.size > s.size:
        raise ValueError("r_bar must not be longer than s_bar")
    r = np.concatenate([r, np.zeros(s.size - r.size, dtype=r.dtype)])
    n = s.size
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    R = s[idx] @ np.conj(r)
    if not (np.iscomplexobj(s) or np.iscomplexobj(r)):
        R = R.real if np.iscomplexobj(R) else R
    return Pdp(np.abs(R) ** 2, 1.0 / sample_rate_hz, 1.0, False, amplitudes=R)


# --------------------------------------------------------------------------
# correlators
# --------------------------------------------------------------------------

def _box(c, width, step):
    """Circular moving average of continuous ``width`` lags.

    ``step=True`` averages the nearest-sample interpolant of ``c``,
    otherwise the piecewise-linear one.
    """
    n = c.size
    ext = int(math.ceil(width / 2)) + 2
    cx = np.concatenate([c[-ext:], c, c[:ext + 1]])
    if step:
        F = np.concatenate([[0], np.cumsum(cx)])

        def integral(u):
            f = np.floor(u).astype(np.int64)
            return F[f] + cx[f] * (u - f)

        m = np.arange(n) + ext + 0.5
    else:
        F = np.concatenate([[0], np.cumsum((cx[:-1] + cx[1:]) / 2)])

        def integral(x):
            f = np.floor(x).astype(np.int64)
            t = x - f
            return F[f] + cx[f] * t + (cx[f + 1] - cx[f]) * t * t / 2

        m = np.arange(n) + ext
    return (integral(m + width / 2) - integral(m - width / 2)) / width


def _lag_smooth(c, width):
    """Lag-axis image of the correlator low-pass.

    The correlator averages with two cascaded boxcars, and over each one
    the lag advances ``width`` samples.  In continuous time the correlation
    of sample-and-hold signals is the linear interpolant of ``c``.
    """
    if width <= 1e-9:
        return c.copy()
    if 2 * width >= c.size:
        raise ValueError(f"low-pass smear of {2 * width:.3g} lags exceeds the {c.size}-lag "
                         "period; raise gamma or the cutoff")
    return _box(_box(c, width, False), width, False)


def _lag_width(config):
    return config.lpf_window / config.gamma


@lru_cache(maxsize=32)
def _clean_response(config):
    """Smoothed replica autocorrelation, normalised to 1 at zero lag."""
    s = transmit(config).samples
    P = s.size
    c = np.fft.ifft(np.fft.fft(s) * np.conj(np.fft.fft(s))).real / P
    k = _lag_smooth(c, _lag_width(config))
    norm = float(k[0])
    k = k / norm
    k.flags.writeable = False
    return k, norm


def _check_received(received, config):
    if not math.isclose(received.sample_rate_hz, config.sample_rate_hz, rel_tol=1e-9):
        raise ValueError(f"received sample rate {received.sample_rate_hz} != "
                         f"oversample*alpha = {config.sample_rate_hz}")
    P = config.period_samples
    if len(received) < P:
        raise ValueError(f"received capture holds {len(received)} samples, "
                         f"needs one PN period ({P})")
    return received.samples[:P]


def _finish(amps, config, is_complex):
    kernel, _ = _clean_response(config)
    if not is_complex:
        amps = amps.real
    return Pdp(np.abs(amps) ** 2, config.gamma / config.sample_rate_hz, config.gamma,
               True, amplitudes=amps, kernel=kernel, chip_period_s=1.0 / config.alpha_hz)


def sliding_correlate_fast(received, config, n_periods=1):
    """Dilated PDP from the lag-domain equivalent of the sliding correlator.

    ``received`` is a steady-state capture whose first ``L * oversample``
    samples hold one PN period, sample 0 aligned with the transmit start.
    The output covers ``n_periods`` sync periods.
    """
    r = _check_received(received, config)
    s = transmit(config).samples
    c = np.fft.ifft(np.fft.fft(r) * np.conj(np.fft.fft(s))) / s.size
    amps = _lag_smooth(c, _lag_width(config)) / _clean_response(config)[1]
    return _finish(np.tile(amps, n_periods), config, np.iscomplexobj(r))


def _beta_ratio(config, hold):
    """``beta / grid rate`` as an exact fraction ``num / den``."""
    target = config.beta_hz / (config.sample_rate_hz * hold)
    frac = Fraction(target).limit_denominator(10 ** 10)
    if abs(float(frac) - target) > 1e-12 * target:
        raise ValueError("beta cannot be represented on the common sample grid; "
                         "use sliding_correlate_fast")
    if frac >= Fraction(1, config.oversample * hold):
        raise ValueError("sample grid too coarse to distinguish alpha from beta")
    return frac.numerator, frac.denominator


def default_grid_factor(config, target_steps=20_000, limit=64):
    """Grid refinement for the direct correlator.

    Each whole-sample step of the lag inside the integration window leaks
    a partial chip-transition sum; the resulting error scales like
    ``sqrt(2 / (gamma * oversample * factor))``.  ``target_steps`` of 20000
    keeps it near 0.01 of the peak.
    """
    return int(min(limit, max(1, math.ceil(target_steps / (config.gamma * config.oversample)))))


def sliding_correlate_direct(received, config, n_periods=1, grid_factor=None,
                             max_samples=MAX_DIRECT_SAMPLES):
    """Dilated PDP from a sample-level simulation of the two-clock correlator.

    The common grid runs ``grid_factor`` times faster than the received
    capture (sample-and-hold).  The slow replica's chip edges fall on the
    nearest grid sample with the remainder carried forward, so the long-run
    rate is exactly ``beta``.  The capture is extended periodically.  Output
    sample ``m`` is read at grid sample ``round(m * gamma * grid_factor)``,
    so one output sample equals one true-delay sample.
    """
    r = _check_received(received, config)
    hold = default_grid_factor(config) if grid_factor is None else int(grid_factor)
    if hold < 1:
        raise ValueError("grid_factor must be >= 1")
    num, den = _beta_ratio(config, hold)
    gamma = config.gamma
    if config.period_samples * hold < gamma:
        raise ValueError(f"replica slips {config.period_samples * hold / gamma:.3g} grid "
                         "samples per PN period; the grid cannot resolve alpha from beta")
    n_out = n_periods * config.period_samples
    window = config.lpf_window * hold
    total = n_out * gamma * hold + 2 * window
    if total > max_samples:
        raise ValueError(f"direct simulation needs ~{total:.3g} samples "
                         f"(limit {max_samples:.3g}); use sliding_correlate_fast")
    positions = np.round(np.arange(n_out) * (gamma * hold)).astype(np.int64)
    replica = to_bipolar(config.sequence).astype(np.float64)
    re = np.ascontiguousarray(r.real, dtype=np.float64)
    im = np.ascontiguousarray(r.imag if np.iscomplexobj(r) else np.zeros(r.size))
    out_re, out_im = _kernels.direct_correlate(re, im, replica, num, den, hold, window, positions)
    amps = (out_re + 1j * out_im) / _clean_response(config)[1]
    return _finish(amps, config, np.iscomplexobj(r))


# --------------------------------------------------------------------------
# sync and axis handling
# --------------------------------------------------------------------------

def detect_sync(pdp, threshold_fraction=0.5, circular=True):
    """Sync pulses: local maxima above ``threshold_fraction`` of the global max.

    By default the record is treated as periodic, which holds for the
    correlator output over whole sync periods, so the first and last samples
    are compared with each other.  With ``circular=False`` edge samples are
    never pulses.  Pulses closer than one dilated chip are merged when the
    PDP carries its chip period.
    """
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must be in (0, 1)")
    p = pdp.powers
    top = p.max() if p.size else 0.0
    if top <= 0:
        raise ValueError("no sync pulses: PDP is identically zero")
    distance = 1
    if pdp.chip_period_s:
        chip = pdp.chip_period_s * (pdp.gamma if pdp.dilated else 1.0)
        distance = max(1, int(chip / pdp.time_step_s))
    if circular:
        idx, _ = find_peaks(np.concatenate([p[-1:], p, p[:1]]),
                            height=threshold_fraction * top, distance=distance)
        idx = np.unique((idx - 1) % p.size)
    else:
        idx, _ = find_peaks(p, height=threshold_fraction * top, distance=distance)
    if idx.size < 2:
        raise ValueError(f"found {idx.size} sync pulse(s); the PDP must span at least two "
                         "periods or the threshold is too high")
    times = idx * pdp.time_step_s
    return SyncInfo(float(np.mean(np.diff(times))), times)


def align_to_sync(pdp, sync):
    """One sync period of ``pdp`` starting at the first sync pulse."""
    start = int(round(sync.pulse_times_s[0] / pdp.time_step_s))
    n = int(round(sync.period_s / pdp.time_step_s))
    idx = (start + np.arange(n)) % len(pdp)

    def take(a):
        return None if a is None else a[idx]

    return Pdp(pdp.powers[idx], pdp.time_step_s, pdp.gamma, pdp.dilated,
               amplitudes=take(pdp.amplitudes), kernel=pdp.kernel,
               chip_period_s=pdp.chip_period_s)


def undilate(pdp):
    """Map the observed-time axis back to true delay (divide by gamma)."""
    if not pdp.dilated:
        raise ValueError("PDP is already undilated")
    return Pdp(pdp.powers, pdp.time_step_s / pdp.gamma, pdp.gamma, False,
               amplitudes=pdp.amplitudes, kernel=pdp.kernel,
               chip_period_s=pdp.chip_period_s)
