import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sounderlab.channel import ChannelModel, MultipathTap, add_awgn, apply_channel, fig6_scenario
from sounderlab.pnseq import PnConfig
from sounderlab.sounder import SounderConfig, Waveform, transmit

FS = 10e9


def pn_wave(n=9, periods=2):
    cfg = SounderConfig(1e9, 999.95e6, PnConfig(n), 10)
    return transmit(cfg, periods)


def shift_add(x, taps, bulk_ns, fs):
    """Literal loop: out[n] += g * x[n - k] for every tap."""
    shifts = [int(round((bulk_ns + t.delay_ns) * 1e-9 * fs)) for t in taps]
    out = [0j] * (len(x) + max(shifts))
    for t, k in zip(taps, shifts):
        g = 10 ** (t.gain_db / 20) * np.exp(1j * t.phase_rad)
        for i, v in enumerate(x):
            out[i + k] += g * v
    return np.array(out)


def test_identity_channel():
    w = pn_wave(5, 1)
    y = apply_channel(w, ChannelModel((MultipathTap(0, 0),)))
    assert np.array_equal(y.samples, w.samples) and not y.is_complex


def test_fig6_preset_values():
    ch = fig6_scenario()
    assert len(ch.taps) == 3
    assert [t.delay_ns for t in ch.taps] == [0, 1, 3]
    assert [t.gain_db for t in ch.taps] == [-4.5, -6, -10.5]
    assert ch.bulk_delay_ns == 100


def test_fig6_matches_shift_add_oracle():
    w = pn_wave(5, 1)
    ch = fig6_scenario()
    y = apply_channel(w, ch)
    np.testing.assert_allclose(y.samples, shift_add(w.samples, ch.taps, 100, FS).real, atol=1e-12)


def test_bulk_delay_100ns_is_1000_samples():
    w = pn_wave(5, 1)
    y = apply_channel(w, ChannelModel((MultipathTap(0, 0),), 100.0))
    assert np.flatnonzero(y.samples)[0] == 1000
    assert np.array_equal(y.samples[1000:], w.samples)


def test_rejects_sub_half_sample_spacing():
    w = pn_wave(5, 1)
    ch = ChannelModel((MultipathTap(0, 0), MultipathTap(0.04, -3)))
    with pytest.raises(ValueError, match="oversample"):
        apply_channel(w, ch)


@pytest.mark.parametrize("kwargs", [
    dict(taps=()), dict(taps=(MultipathTap(1, 0),)),
    dict(taps=(MultipathTap(0, 0), MultipathTap(3, 0), MultipathTap(2, 0))),
    dict(taps=(MultipathTap(0, 0),), bulk_delay_ns=-1),
])
def test_channel_model_rejects(kwargs):
    with pytest.raises(ValueError):
        ChannelModel(**kwargs)


def test_tap_rejects():
    with pytest.raises(ValueError):
        MultipathTap(-1, 0)
    with pytest.raises(ValueError):
        MultipathTap(0, 1)


def test_complex_taps_give_complex_output():
    w = pn_wave(5, 1)
    ch = ChannelModel((MultipathTap(0, 0, 0.5), MultipathTap(2, -3, -1.0)), 5)
    y = apply_channel(w, ch)
    assert y.is_complex
    np.testing.assert_allclose(y.samples, shift_add(w.samples, ch.taps, 5, FS), atol=1e-12)


# ---------------------------------------------------------------- noise

def test_awgn_0db_power():
    w = Waveform(np.tile([1.0, -1.0], 60000), 1.0)
    y = add_awgn(w, 0.0, seed=7)
    noise = y.samples - w.samples
    assert abs(np.mean(noise ** 2) / w.power - 1) < 0.05


def test_awgn_complex_0db_power():
    w = Waveform(np.exp(1j * np.arange(100000) * 0.1), 1.0)
    noise = add_awgn(w, 0.0, seed=1).samples - w.samples
    assert abs(np.mean(np.abs(noise) ** 2) - 1) < 0.05
    # circular: I and Q carry half each
    assert abs(np.mean(noise.real ** 2) - 0.5) < 0.03


def test_awgn_high_snr():
    w = pn_wave(7, 1)
    y = add_awgn(w, 60.0, seed=3)
    rms = np.sqrt(w.power)
    assert np.max(np.abs(y.samples - w.samples)) < 0.01 * rms


def test_awgn_deterministic_and_zero_power():
    w = pn_wave(5, 1)
    assert np.array_equal(add_awgn(w, 3, 11).samples, add_awgn(w, 3, 11).samples)
    assert not np.array_equal(add_awgn(w, 3, 11).samples, add_awgn(w, 3, 12).samples)
    with pytest.raises(ValueError):
        add_awgn(Waveform(np.zeros(10), 1.0), 0, 0)


def test_channel_noise_uses_model_seed():
    w = pn_wave(5, 1)
    ch = ChannelModel((MultipathTap(0, 0),), awgn_snr_db=10, noise_seed=4)
    a, b = apply_channel(w, ch), apply_channel(w, ch)
    assert np.array_equal(a.samples, b.samples)
    clean = apply_channel(w, ch.without_noise())
    assert np.array_equal(clean.samples, w.samples)


# ---------------------------------------------------------------- properties

taps_st = st.lists(
    st.tuples(st.integers(0, 40), st.floats(-20, 0), st.floats(-3.1, 3.1)),
    min_size=1, max_size=4, unique_by=lambda t: t[0])


def _model(raw, bulk=0.0):
    raw = sorted(raw)
    base = raw[0][0]
    return ChannelModel(tuple(MultipathTap((d - base) / 10, g, p) for d, g, p in raw),
                        bulk + base / 10)


@settings(max_examples=30, deadline=None)
@given(taps_st, taps_st)
def test_superposition(a, b):
    a_d = {t[0] for t in a}
    b = [t for t in b if t[0] not in a_d]
    if not b:
        return
    w = pn_wave(5, 1)
    union = apply_channel(w, _model(a + b)).samples
    ya, yb = apply_channel(w, _model(a)).samples, apply_channel(w, _model(b)).samples
    n = max(ya.size, yb.size)
    total = np.zeros(n, dtype=complex)
    total[:ya.size] += ya
    total[:yb.size] += yb
    np.testing.assert_allclose(union, total[:union.size], atol=1e-12)
    assert np.allclose(total[union.size:], 0)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-20, 0), min_size=1, max_size=3))
def test_energy_with_separated_taps(gains):
    # single isolated pulse: no overlap between copies
    x = np.zeros(50)
    x[0] = 1.0
    w = Waveform(x, FS)
    ch = ChannelModel(tuple(MultipathTap(i * 1.0, g) for i, g in enumerate(gains)))
    y = apply_channel(w, ch)
    want = sum(10 ** (g / 10) for g in gains)
    assert np.sum(np.abs(y.samples) ** 2) == pytest.approx(want, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 200), st.floats(0, 50))
def test_delay_fidelity(bulk, extra):
    w = pn_wave(7, 1)
    ch = ChannelModel((MultipathTap(0, 0), MultipathTap(extra + 20, -3)), bulk)
    y = apply_channel(w, ch).samples
    x = w.samples
    n = y.size
    xc = np.fft.ifft(np.fft.fft(y, 2 * n) * np.conj(np.fft.fft(x, 2 * n))).real
    first = int(np.argmax(xc[:n]))
    assert abs(first / FS * 1e9 - bulk) <= 0.5 / FS * 1e9 + 1e-9
