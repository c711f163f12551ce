import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sounderlab.channel import ChannelModel, MultipathTap
from sounderlab.pipeline import peak_to_median_db, simulate_received, sync_signal
from sounderlab.pnseq import PnConfig, generate, lfsr_sequence, to_bipolar
from sounderlab.sounder import (
    Pdp,
    SounderConfig,
    Waveform,
    detect_sync,
    discrete_correlation,
    slide_factor,
    sliding_correlate_direct,
    sliding_correlate_fast,
    sync_period,
    transmit,
    undilate,
    upsample,
)


def desk(n=5, gamma=100, os=10, alpha=1e6, **kw):
    return SounderConfig(alpha, alpha * (1 - 1 / gamma), PnConfig(n, chip_rate_hz=alpha), os, **kw)


def tap_peak(pdp, sample, halfwidth):
    """Index and power of the largest sample within ``halfwidth`` of ``sample``."""
    n = len(pdp)
    idx = [(sample + j) % n for j in range(-halfwidth, halfwidth + 1)]
    best = max(idx, key=lambda i: pdp.powers[i])
    return best, pdp.powers[best]


# ---------------------------------------------------------------- clock algebra

def test_slide_factor_examples():
    assert slide_factor(1e9, 999.95e6) == 20000
    assert slide_factor(1e9, 0.99e9) == pytest.approx(100, rel=1e-12)
    assert slide_factor(2e9, 1.999e9) == pytest.approx(2000, rel=1e-12)


@pytest.mark.parametrize("a,b", [(1e9, 1e9), (1e9, 2e9), (1e9, 0.0), (1e9, -1.0)])
def test_slide_factor_rejects(a, b):
    with pytest.raises(ValueError):
        slide_factor(a, b)


def test_sync_period_examples():
    assert sync_period(4095, 1e9, 20000) == 0.0819
    assert sync_period(2047, 1e9, 20000) == pytest.approx(40.94e-3, rel=1e-12)
    assert sync_period(31, 1e6, 1) == 31e-6
    with pytest.raises(ValueError):
        sync_period(31, 1e6, 0.5)


def test_sounder_config_validation():
    pn = PnConfig(5, chip_rate_hz=1e6)
    with pytest.raises(ValueError):
        SounderConfig(1e6, 1e6, pn)
    with pytest.raises(ValueError):
        SounderConfig(1e6, 0.99e6, pn, oversample=1)
    with pytest.raises(ValueError):
        SounderConfig(2e6, 1.99e6, pn)
    with pytest.raises(ValueError):
        SounderConfig(1e6, 0.99e6, pn, lpf_cutoff_hz=-1)
    cfg = SounderConfig(1e6, 0.99e6, pn, 10)
    assert cfg.sample_rate_hz == 1e7 and cfg.period_samples == 310
    assert cfg.sync_period_s == pytest.approx(3.1e-3, rel=1e-12)


# ---------------------------------------------------------------- upsample / discrete correlation

def test_upsample_examples():
    w = upsample(np.array([1, -1, 1]), 2, chip_rate_hz=1.0)
    assert w.samples.tolist() == [1, 1, -1, -1, 1, 1] and w.sample_rate_hz == 2.0
    w = upsample(generate(PnConfig(12)), 10)
    assert len(w) == 40950 and w.sample_rate_hz == 10e9
    b = to_bipolar(generate(PnConfig(7)))
    assert np.array_equal(upsample(b, 7, 1.0).samples[3::7], b)
    with pytest.raises(ValueError):
        upsample(b, 1, 1.0)


def test_discrete_correlation_examples():
    m = to_bipolar(lfsr_sequence({3, 2}, 3, "111")).astype(float)
    p = discrete_correlation(m, m)
    assert p.powers.tolist() == [49.0] + [1.0] * 6
    assert p.gamma == 1 and not p.dilated
    assert discrete_correlation([1.0], [1.0]).powers.tolist() == [1.0]
    delayed = np.roll(m, 2)
    p = discrete_correlation(delayed, m)
    assert int(np.argmax(p.powers)) == 2 and p.powers[2] == 49
    with pytest.raises(ValueError):
        discrete_correlation([], [])


def test_discrete_correlation_brute_force():
    rng = np.random.default_rng(0)
    s, r = rng.choice([-1.0, 1.0], 9), rng.choice([-1.0, 1.0], 6)
    rp = np.concatenate([r, np.zeros(3)])
    want = [sum(s[(i + k) % 9] * rp[i] for i in range(9)) ** 2 for k in range(9)]
    np.testing.assert_allclose(discrete_correlation(s, r).powers, want)


# ---------------------------------------------------------------- Pdp / undilate

def test_pdp_invariants():
    with pytest.raises(ValueError):
        Pdp(np.array([1.0, -0.1]), 1.0)
    with pytest.raises(ValueError):
        Pdp(np.array([1.0]), 1.0, gamma=0.5)


def test_undilate_examples():
    p = Pdp(np.ones(4), 20e-6, 20000.0, True)
    u = undilate(p)
    assert u.time_step_s == pytest.approx(1e-9, rel=1e-12) and not u.dilated
    assert np.array_equal(u.powers, p.powers)
    with pytest.raises(ValueError):
        undilate(u)
    one = undilate(Pdp(np.ones(3), 1e-3, 1.0, True))
    assert one.time_step_s == 1e-3


def test_undilate_round_trip_matches_discrete_axis():
    cfg = desk(gamma=250)
    s = transmit(cfg).samples
    ref = discrete_correlation(s, s, cfg.sample_rate_hz)
    dil = Pdp(ref.powers, ref.time_step_s * cfg.gamma, cfg.gamma, True)
    back = undilate(dil)
    assert back.time_step_s == pytest.approx(ref.time_step_s, rel=1e-12)
    np.testing.assert_allclose(back.times, ref.times, rtol=1e-12)


# ---------------------------------------------------------------- correlators

def test_direct_zero_input_gives_zero():
    cfg = desk()
    zero = Waveform(np.zeros(cfg.period_samples), cfg.sample_rate_hz)
    assert not np.any(sliding_correlate_direct(zero, cfg).powers)
    assert not np.any(sliding_correlate_fast(zero, cfg).powers)


def test_direct_clean_single_peak_per_period_and_spacing():
    cfg = desk()
    out = sliding_correlate_direct(transmit(cfg), cfg, n_periods=3)
    assert out.dilated and out.time_step_s == pytest.approx(1e-5)
    sync = detect_sync(out)
    assert len(sync.pulse_times_s) == 3
    assert abs(sync.period_s - 3.1e-3) <= out.time_step_s
    assert np.max(out.powers) == pytest.approx(1.0, abs=0.02)


def test_two_tap_channel_direct_vs_fast():
    cfg = desk()
    ch = ChannelModel((MultipathTap(0, 0), MultipathTap(2000, -6)))   # 2 chips at 1 Mcps
    rx = simulate_received(cfg, ch)
    d = sliding_correlate_direct(rx, cfg)
    f = sliding_correlate_fast(rx, cfg)
    os = cfg.oversample
    for pdp in (d, f):
        (i0, p0), (i1, p1) = tap_peak(pdp, 0, os // 2), tap_peak(pdp, 2 * os, os // 2)
        assert (i1 - i0) * pdp.time_step_s == pytest.approx(2 * cfg.gamma / cfg.alpha_hz, abs=pdp.time_step_s)
        assert 10 * math.log10(p0 / p1) == pytest.approx(6.0, abs=0.5)


def test_fast_single_path_is_chip_triangle():
    cfg = desk(gamma=20000, os=10)
    out = sliding_correlate_fast(transmit(cfg), cfg)
    L, os = cfg.pn_length, cfg.oversample
    k = np.arange(-os, os + 1)
    tri = 1 - np.abs(k) / os * (1 + 1 / L)
    np.testing.assert_allclose(out.amplitudes[k % out.powers.size], tri, atol=2e-3)
    assert np.allclose(out.amplitudes[os + 1: -os - 1], -1 / L, atol=2e-3)
    # width 2 chips on the dilated axis
    assert 2 * os * out.time_step_s == pytest.approx(2 * cfg.gamma / cfg.alpha_hz)


def test_fast_full_scale_sync_period():
    cfg = SounderConfig(1e9, 999.95e6, PnConfig(12), 10)
    out = sync_signal(cfg, n_periods=2, method="fast")
    sync = detect_sync(out)
    assert len(sync.pulse_times_s) == 2
    assert sync.period_s == pytest.approx(0.0819, abs=out.time_step_s)


def test_direct_rejects_coarse_grid_and_budget():
    cfg = desk(gamma=20000)
    with pytest.raises(ValueError, match="slips"):
        sliding_correlate_direct(transmit(cfg), cfg, grid_factor=1)
    cfg = desk(n=9, gamma=200)
    with pytest.raises(ValueError, match="limit"):
        sliding_correlate_direct(transmit(cfg), cfg, max_samples=1000)


def test_fast_rejects_excess_smear():
    cfg = desk(gamma=2)
    with pytest.raises(ValueError, match="smear"):
        sliding_correlate_fast(transmit(cfg), cfg)


def test_received_checks():
    cfg = desk()
    with pytest.raises(ValueError, match="sample rate"):
        sliding_correlate_fast(Waveform(np.ones(400), 2e7), cfg)
    with pytest.raises(ValueError, match="one PN period"):
        sliding_correlate_fast(Waveform(np.ones(10), 1e7), cfg)


def test_complex_input_keeps_phase():
    cfg = desk(gamma=150)
    ch = ChannelModel((MultipathTap(0, 0, 1.0),))
    f = sliding_correlate_fast(simulate_received(cfg, ch), cfg)
    d = sliding_correlate_direct(simulate_received(cfg, ch), cfg)
    for pdp in (f, d):
        k = int(np.argmax(pdp.powers))
        assert np.angle(pdp.amplitudes[k]) == pytest.approx(1.0, abs=0.02)


# ---------------------------------------------------------------- detect_sync

def test_detect_sync_errors():
    with pytest.raises(ValueError, match="zero"):
        detect_sync(Pdp(np.zeros(50), 1.0, 10.0, True))
    one = np.zeros(50)
    one[10] = 1
    with pytest.raises(ValueError, match="1 sync pulse"):
        detect_sync(Pdp(one, 1.0, 10.0, True))
    with pytest.raises(ValueError):
        detect_sync(Pdp(one, 1.0, 10.0, True), threshold_fraction=1.5)


def test_detect_sync_circular_edges():
    p = np.zeros(30)
    p[[0, 10, 20]] = 1.0
    p[29] = 0.8       # rising edge of the next period's pulse
    assert detect_sync(Pdp(p, 1.0, 5.0, True)).pulse_times_s.tolist() == [0, 10, 20]
    assert detect_sync(Pdp(p, 1.0, 5.0, True), circular=False).pulse_times_s.tolist() == [10, 20]


# ---------------------------------------------------------------- properties

@settings(max_examples=12, deadline=None)
@given(st.integers(5, 9), st.integers(20, 400), st.integers(2, 8))
def test_dilation_algebra(n, gamma, os):
    cfg = desk(n=n, gamma=gamma, os=os)
    if 2 * cfg.lpf_window / cfg.gamma >= cfg.period_samples:
        return
    out = sync_signal(cfg, n_periods=3, method="fast")
    sync = detect_sync(out)
    assert abs(sync.period_s / cfg.gamma - cfg.pn_length / cfg.alpha_hz) <= out.time_step_s / cfg.gamma


@pytest.mark.parametrize("n,gamma,os", [(5, 100, 4), (6, 150, 3)])
def test_dilation_algebra_direct(n, gamma, os):
    cfg = desk(n=n, gamma=gamma, os=os)
    out = sync_signal(cfg, n_periods=3, method="direct")
    sync = detect_sync(out)
    assert abs(sync.period_s - cfg.sync_period_s) <= out.time_step_s


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 2 ** 31))
def test_scale_invariance(c, seed):
    cfg = desk(gamma=120, os=4)
    rng = np.random.default_rng(seed)
    rx = Waveform(rng.normal(size=cfg.period_samples), cfg.sample_rate_hz)
    scaled = Waveform(c * rx.samples, rx.sample_rate_hz)
    for corr in (sliding_correlate_fast, sliding_correlate_direct):
        a, b = corr(rx, cfg), corr(scaled, cfg)
        np.testing.assert_allclose(b.powers, c * c * a.powers, rtol=1e-9,
                                   atol=1e-12 * c * c * a.powers.max())
        assert np.argmax(a.powers) == np.argmax(b.powers)


def test_processing_gain_at_minus_10db_snr():
    cfg = SounderConfig(1e9, 0.999e9, PnConfig(9), 4)     # L = 511, gamma = 1000
    ch = ChannelModel((MultipathTap(0, 0),), 50.0, awgn_snr_db=-10.0, noise_seed=1)
    pdp = sliding_correlate_fast(simulate_received(cfg, ch), cfg)
    assert peak_to_median_db(pdp) > 10.0


@pytest.mark.parametrize("n,gamma", [(5, 200), (6, 400), (7, 400)])
def test_equivalence_where_self_noise_is_small(n, gamma):
    # gamma well above ~21 sqrt(L): slide self-noise stays under the tolerance
    cfg = desk(n=n, gamma=gamma, os=6)
    L = cfg.pn_length
    ch = ChannelModel((MultipathTap(0, 0), MultipathTap(5000, -6)), 3000)
    rx = simulate_received(cfg, ch)
    d, f = sliding_correlate_direct(rx, cfg), sliding_correlate_fast(rx, cfg)
    k0, k1 = 3 * 6, 8 * 6
    (a0, p0), (a1, p1) = tap_peak(d, k0, 3), tap_peak(d, k1, 3)
    (b0, q0), (b1, q1) = tap_peak(f, k0, 3), tap_peak(f, k1, 3)
    assert abs(a0 - b0) <= 1 and abs(a1 - b1) <= 1
    assert abs(10 * math.log10(p1 / p0) - 10 * math.log10(q1 / q0)) <= 0.5
    assert L == 2 ** n - 1
