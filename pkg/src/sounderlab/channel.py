"""Static tap-delay-line channel and AWGN."""

from dataclasses import dataclass

import numpy as np

from .sounder import Waveform


@dataclass(frozen=True)
class MultipathTap:
    delay_ns: float
    gain_db: float
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.delay_ns < 0:
            raise ValueError(f"tap delay must be >= 0, got {self.delay_ns}")
        if self.gain_db > 0:
            raise ValueError(f"tap gain must be <= 0 dB, got {self.gain_db}")

    @property
    def amplitude(self):
        return 10 ** (self.gain_db / 20) * np.exp(1j * self.phase_rad)


@dataclass(frozen=True)
class ChannelModel:
    taps: tuple
    bulk_delay_ns: float = 0.0
    awgn_snr_db: float = None
    noise_seed: int = 0

    def __post_init__(self):
        taps = tuple(self.taps)
        if not taps:
            raise ValueError("channel needs at least one tap")
        if self.bulk_delay_ns < 0:
            raise ValueError("bulk delay must be >= 0")
        if any(a.delay_ns > b.delay_ns for a, b in zip(taps, taps[1:])):
            raise ValueError("taps must be sorted by delay")
        if taps[0].delay_ns != 0:
            raise ValueError("first tap must sit at relative delay 0; use bulk_delay_ns")
        object.__setattr__(self, "taps", taps)

    @property
    def is_real(self):
        return all(t.phase_rad == 0 for t in self.taps)

    def without_noise(self):
        return ChannelModel(self.taps, self.bulk_delay_ns, None, self.noise_seed)


def fig6_scenario():
    """LOS plus two echoes: replicas at 0, +1, +3 ns after a 100 ns bulk delay,
    attenuated by 4.5, 6 and 10.5 dB."""
    return ChannelModel(
        taps=(MultipathTap(0.0, -4.5), MultipathTap(1.0, -6.0), MultipathTap(3.0, -10.5)),
        bulk_delay_ns=100.0,
    )


def tap_shifts(ch, sample_rate_hz):
    """Integer sample shift of every tap (bulk delay included)."""
    half = 0.5e9 / sample_rate_hz  # half a sample, in ns
    rel = [t.delay_ns for t in ch.taps]
    for a, b in zip(rel, rel[1:]):
        if 0 < b - a < half:
            raise ValueError(f"tap spacing {b - a} ns is finer than half a sample "
                             f"({half} ns); raise oversample")
    return [int(round((ch.bulk_delay_ns + d) * 1e-9 * sample_rate_hz)) for d in rel]


def apply_channel(tx, ch):
    """Sum of delayed, scaled copies of ``tx``, then AWGN if configured.

    Delays round to the nearest sample.  The output is ``len(tx)`` plus the
    largest shift long, so no energy is cut off.
    """
    shifts = tap_shifts(ch, tx.sample_rate_hz)
    x = tx.samples
    dtype = np.complex128 if (np.iscomplexobj(x) or not ch.is_real) else np.float64
    out = np.zeros(x.size + max(shifts), dtype=dtype)
    for tap, k in zip(ch.taps, shifts):
        g = tap.amplitude if dtype == np.complex128 else tap.amplitude.real
        out[k:k + x.size] += g * x
    y = Waveform(out, tx.sample_rate_hz)
    if ch.awgn_snr_db is not None:
        y = add_awgn(y, ch.awgn_snr_db, ch.noise_seed)
    return y


def add_awgn(w, snr_db, seed):
    """Add white Gaussian noise at ``snr_db`` below the waveform's mean power.

    Complex inputs get circular complex noise; real inputs real noise.
    """
    p = w.power
    if p <= 0:
        raise ValueError("cannot set an SNR on a zero-power waveform")
    noise_power = p / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    x = w.samples
    if np.iscomplexobj(x):
        n = rng.normal(size=x.size) + 1j * rng.normal(size=x.size)
        n *= np.sqrt(noise_power / 2)
    else:
        n = rng.normal(scale=np.sqrt(noise_power), size=x.size)
    return Waveform(x + n, w.sample_rate_hz)
