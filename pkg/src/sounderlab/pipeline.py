"""End-to-end sounding runs: TX, channel, RX correlation, sync alignment."""

import numpy as np

from .channel import add_awgn, apply_channel, tap_shifts
from .sounder import (
    Waveform,
    align_to_sync,
    detect_sync,
    sliding_correlate_direct,
    sliding_correlate_fast,
    transmit,
    undilate,
)


def simulate_received(config, channel):
    """One steady-state PN period as seen at the RX baseband.

    Sample 0 of the capture coincides with a transmit period boundary, so
    correlator lag ``k`` is an absolute propagation delay of ``k`` samples.
    Noise, if configured, is added to the captured period only.
    """
    P = config.period_samples
    skip = -(-max(tap_shifts(channel, config.sample_rate_hz)) // P)
    tx = transmit(config, n_periods=skip + 1)
    rx = apply_channel(tx, channel.without_noise())
    capture = Waveform(rx.samples[skip * P:(skip + 1) * P], rx.sample_rate_hz)
    if channel.awgn_snr_db is not None:
        capture = add_awgn(capture, channel.awgn_snr_db, channel.noise_seed)
    return capture


def sync_signal(config, n_periods=3, method="direct"):
    """Sync output: PNSG1 correlated against PNSG2 with no channel."""
    clean = transmit(config)
    if method == "direct":
        return sliding_correlate_direct(clean, config, n_periods=n_periods)
    return sliding_correlate_fast(clean, config, n_periods=n_periods)


def measure_pdp(config, channel, method="fast", n_periods=2):
    """Undilated PDP over one sync period, aligned to the sync pulse train.

    Returns ``(pdp, sync)`` where ``sync`` was measured on the same
    correlator so the absolute delay axis starts at a sync pulse.
    """
    received = simulate_received(config, channel)
    correlate = sliding_correlate_direct if method == "direct" else sliding_correlate_fast
    dilated = correlate(received, config, n_periods=n_periods)
    sync = detect_sync(sync_signal(config, n_periods=n_periods, method=method))
    return undilate(align_to_sync(dilated, sync)), sync


def peak_to_median_db(pdp):
    p = pdp.powers
    return float(10 * np.log10(p.max() / np.median(p)))
