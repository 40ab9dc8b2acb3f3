import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sosgen.sigproc import (
    CorruptionConfig,
    PreprocConfig,
    SigprocInputError,
    add_awgn,
    add_phase_noise,
    add_quant_noise,
    mute_head,
    normalize_channels,
    preprocess,
    signal_power,
    tgc,
    tgc_gain,
)
from sosgen.solver import RfFrame


def make_frame(samples, fs=40e6):
    return RfFrame(samples=np.asarray(samples, dtype=np.float64),
                   sample_rate=fs, provenance={})


def random_frame(seed=0, shape=(192, 2048)):
    rng = np.random.default_rng(seed)
    return make_frame(rng.standard_normal(shape))


# ---------------------------------------------------------------------------
# TGC


def test_tgc_gain_closed_form():
    cfg = PreprocConfig()
    # two-way path of 2 cm: t = 0.02 m / 1540 m/s
    t = np.array([0.0, 0.02 / 1540.0])
    g = tgc_gain(t, cfg)
    assert g[0] == 1.0
    assert abs(g[1] - 10.0**0.375) < 1e-12


def test_tgc_monotone():
    cfg = PreprocConfig()
    t = np.linspace(0, 50e-6, 512)
    g = tgc_gain(t, cfg)
    assert np.all(np.diff(g) > 0)


def test_tgc_applies_per_sample():
    cfg = PreprocConfig()
    frame = make_frame(np.ones((2, 8)))
    out = tgc(frame, cfg)
    t = np.arange(8) / frame.sample_rate
    np.testing.assert_allclose(out.samples, np.tile(tgc_gain(t, cfg), (2, 1)))
    assert np.all(frame.samples == 1.0)  # input untouched


# ---------------------------------------------------------------------------
# mute


def test_mute_identity_at_zero():
    frame = random_frame()
    out = mute_head(frame, 0)
    np.testing.assert_array_equal(out.samples, frame.samples)


def test_mute_first_100():
    frame = random_frame()
    out = mute_head(frame, 100)
    assert np.all(out.samples[:, :100] == 0.0)
    np.testing.assert_array_equal(out.samples[:, 100:], frame.samples[:, 100:])


def test_mute_reduces_energy():
    frame = random_frame()
    out = mute_head(frame, 100)
    assert np.sum(out.samples**2) <= np.sum(frame.samples**2)


def test_mute_out_of_range():
    frame = random_frame(shape=(4, 64))
    with pytest.raises(SigprocInputError):
        mute_head(frame, 64)


# ---------------------------------------------------------------------------
# normalization


def test_normalize_hand_case():
    frame = make_frame([[2.0, 4.0, 6.0]])
    out = normalize_channels(frame)
    np.testing.assert_allclose(out.samples, [[-1.0, 0.0, 1.0]])


def test_normalize_fixed_point():
    frame = make_frame([[-1.0, 0.0, 1.0]])
    out = normalize_channels(frame)
    np.testing.assert_array_equal(out.samples, frame.samples)


def test_normalize_all_zero_channel_flagged():
    x = np.zeros((3, 16))
    x[0] = np.sin(np.arange(16))
    out = normalize_channels(make_frame(x))
    assert np.all(out.samples[1:] == 0.0)
    assert out.provenance["dead_channels"] == [1, 2]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_normalize_contract(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((4, 128)) * rng.uniform(0.1, 100)
    out = normalize_channels(make_frame(x)).samples
    peak = np.abs(out).max(axis=1)
    np.testing.assert_allclose(peak, 1.0, atol=1e-12)
    assert np.all(np.abs(out.mean(axis=1)) <= 1e-12 * peak)


# ---------------------------------------------------------------------------
# quantization noise


def test_quant_noise_bounds_and_moments():
    rng = np.random.default_rng(0)
    x = np.clip(rng.standard_normal((512, 2048)) / 4.0, -1.0, 1.0)
    frame = make_frame(x)
    out = add_quant_noise(frame, 12, seed=3)
    q = 2.0 / 4096.0
    assert q == pytest.approx(4.8828125e-4)
    noise = out.samples - x
    assert np.abs(noise).max() <= q / 2.0
    n = noise.size
    sigma_mean = q / np.sqrt(12.0) / np.sqrt(n)
    assert abs(noise.mean()) < 3.0 * sigma_mean


def test_quant_noise_deterministic():
    frame = make_frame(np.zeros((8, 64)))
    a = add_quant_noise(frame, 12, seed=9)
    b = add_quant_noise(frame, 12, seed=9)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_quant_noise_requires_normalized_input():
    frame = make_frame(np.full((2, 8), 1.5))
    with pytest.raises(SigprocInputError):
        add_quant_noise(frame, 12, seed=0)


# ---------------------------------------------------------------------------
# AWGN


@pytest.mark.parametrize("target", [10.0, 15.0, 20.0])
def test_awgn_realized_snr(target):
    frame = random_frame(seed=1)
    out = add_awgn(frame, target, seed=7)
    noise = out.samples - frame.samples
    realized = 10.0 * np.log10(signal_power(frame) / np.mean(noise**2))
    assert abs(realized - target) < 0.2


def test_awgn_disabled_is_identity():
    frame = random_frame()
    assert add_awgn(frame, None, 0) is frame
    assert add_awgn(frame, np.inf, 0) is frame


def test_awgn_seeds_differ_but_snr_matches():
    frame = random_frame(seed=2)
    a = add_awgn(frame, 10.0, seed=1)
    b = add_awgn(frame, 10.0, seed=2)
    assert not np.array_equal(a.samples, b.samples)
    for out in (a, b):
        noise = out.samples - frame.samples
        realized = 10.0 * np.log10(signal_power(frame) / np.mean(noise**2))
        assert abs(realized - 10.0) < 0.2


def test_awgn_power_excludes_muted_head():
    frame = mute_head(random_frame(seed=3), 512)
    p = signal_power(frame)
    # power over the nonzero region only
    assert p == pytest.approx(np.mean(frame.samples[:, 512:] ** 2))


def test_awgn_zero_power_rejected():
    with pytest.raises(SigprocInputError):
        add_awgn(make_frame(np.zeros((2, 4))), 10.0, 0)


# ---------------------------------------------------------------------------
# phase noise


def test_phase_zero_identity():
    frame = random_frame(seed=4, shape=(8, 1024))
    out = add_phase_noise(frame, 0.0, seed=1)
    err = np.abs(out.samples - frame.samples).max() / np.abs(frame.samples).max()
    assert err < 1e-9


def test_phase_magnitude_spectrum_preserved():
    frame = random_frame(seed=5, shape=(8, 1024))
    # zero-mean channels so the DC bin carries nothing
    frame = normalize_channels(frame)
    out = add_phase_noise(frame, 0.7, seed=2)
    before = np.abs(np.fft.rfft(frame.samples, axis=1))
    after = np.abs(np.fft.rfft(out.samples, axis=1))
    scale = before.max(axis=1, keepdims=True)
    assert np.max(np.abs(after - before) / scale) < 1e-6


def test_phase_quarter_turn_on_tone():
    n = 1024
    t = np.arange(n)
    x = np.cos(2 * np.pi * 8 * t / n)
    frame = make_frame(x[None, :])
    analytic = np.cos(2 * np.pi * 8 * t / n) + 1j * np.sin(2 * np.pi * 8 * t / n)
    expected = np.real(analytic * np.exp(1j * np.pi / 2))  # cos -> -sin
    # drive the channel to exactly pi/2 by monkeypatching the draw
    import sosgen.sigproc as sp

    class FixedRng:
        def uniform(self, lo, hi, size):
            return np.full(size, np.pi / 2)

    orig = np.random.default_rng
    np.random.default_rng = lambda seed=None: FixedRng()
    try:
        out = sp.add_phase_noise(frame, np.pi / 2, seed=0)
    finally:
        np.random.default_rng = orig
    np.testing.assert_allclose(out.samples[0], expected, atol=1e-9)
    np.testing.assert_allclose(out.samples[0], -np.sin(2 * np.pi * 8 * t / n), atol=1e-9)


def test_corruption_same_seed_identical():
    from sosgen.sigproc import corrupt

    frame = random_frame(seed=6, shape=(8, 512))
    cfg = CorruptionConfig(awgn_target_snr_db=15.0, phase_range_rad=0.7, noise_seed=11)
    a = corrupt(frame, cfg)
    b = corrupt(frame, cfg)
    np.testing.assert_array_equal(a.samples, b.samples)


# ---------------------------------------------------------------------------
# chain


def test_preprocess_chain_order_and_contract():
    frame = random_frame(seed=7, shape=(16, 512))
    cfg = PreprocConfig(mute_samples=50, quant_bits=12)
    out = preprocess(frame, cfg, seed=1)
    assert out.provenance["tgc"] is True
    assert out.provenance["muted_samples"] == 50
    assert out.provenance["normalized"] is True
    assert out.provenance["quant_bits"] == 12
    assert np.abs(out.samples).max() <= 1.0 + 2.0 / 4096.0


def test_preprocess_deterministic():
    frame = random_frame(seed=8, shape=(16, 512))
    cfg = PreprocConfig(mute_samples=50)
    a = preprocess(frame, cfg, seed=5)
    b = preprocess(frame, cfg, seed=5)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_invalid_configs_rejected():
    with pytest.raises(SigprocInputError):
        PreprocConfig(quant_bits=4)
    with pytest.raises(SigprocInputError):
        CorruptionConfig(phase_range_rad=-0.1)
