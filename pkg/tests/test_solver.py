import numpy as np
import pytest
from scipy.signal import hilbert

from sosgen.geometry import make_desk_scale, make_full_scale
from sosgen.phantom import PhantomSample
from sosgen.solver import (
    DivergenceError,
    StabilityError,
    WaveStepper,
    make_tone_burst,
    resample_bandlimited,
    simulate,
)

GRID4, TD4, FOV4 = make_desk_scale(4)
GRID8, TD8, FOV8 = make_desk_scale(8)


def uniform_phantom(grid, sos=1540.0, rho=1020.0, atten=0.0):
    shape = (grid.nz, grid.nx)
    return PhantomSample(
        sos=np.full(shape, sos),
        density=np.full(shape, rho),
        attenuation_coeff=atten,
        alpha_power=1.5,
        bona=9.63,
        inclusion_mask=None,
        skin_or_layer_mask=None,
        seed=0,
        generator_tag="single_inclusion",
    )


def matched_tof_and_amp(frame, transducer, grid, window, n_center=16):
    """Round-trip arrival and echo strength via matched filtering."""
    src = make_tone_burst(grid, transducer)
    fs = transducer.rx_sample_rate
    n_src = int(np.ceil(src.duration * fs)) + 2
    ref = resample_bandlimited(src.waveform, 1.0 / grid.dt, fs, n_src)
    ch = transducer.n_channels // 2
    tr = frame.samples[ch - n_center // 2 : ch + n_center // 2].mean(axis=0)
    w = np.zeros_like(tr)
    lo, hi = int(window[0] * fs), int(window[1] * fs)
    w[lo:hi] = tr[lo:hi]
    xc = np.correlate(w, ref, mode="full")
    lags = np.arange(-len(ref) + 1, len(tr)) / fs
    env = np.abs(hilbert(xc))
    return lags[np.argmax(env)], env.max()


# ---------------------------------------------------------------------------
# tone burst


def test_tone_burst_full_scale_sample_count():
    grid, td, _ = make_full_scale()
    src = make_tone_burst(grid, td)
    assert np.count_nonzero(src.waveform) == 69
    assert src.waveform[0] == 0.0
    assert abs(src.waveform.size * grid.dt - 0.4e-6) <= grid.dt


def test_tone_burst_duration_desk():
    src = make_tone_burst(GRID4, TD4)
    assert src.duration == pytest.approx(2 / TD4.center_freq)
    assert abs(src.waveform.size * GRID4.dt - src.duration) <= GRID4.dt


# ---------------------------------------------------------------------------
# heavy simulations, run once per module

TOF_TRUE = 2 * 0.019 / 1540.0


@pytest.fixture(scope="module")
def point_reflector_frame():
    sample = uniform_phantom(GRID4)
    zi = round(0.019 / GRID4.dx)
    xc = GRID4.nx // 2
    sample.density[zi : zi + 2, xc - 1 : xc + 1] = 2040.0
    return simulate(sample, GRID4, TD4)


@pytest.fixture(scope="module")
def interface_frames():
    zi = round(0.019 / GRID4.dx)
    frames = {}
    for name, c2 in (("high", 1700.0), ("cal", 1300.0)):
        sample = uniform_phantom(GRID4)
        sample.sos[zi:, :] = c2
        frames[name] = simulate(sample, GRID4, TD4)
    return frames


@pytest.fixture(scope="module")
def quiet_and_strong_frames():
    quiet = simulate(uniform_phantom(GRID4), GRID4, TD4)
    strong = uniform_phantom(GRID4)
    zi = round(0.019 / GRID4.dx)
    strong.density[zi:, :] = 102000.0  # impedance ratio 100: near-total reflector
    return quiet, simulate(strong, GRID4, TD4)


def test_rf_frame_shape(point_reflector_frame):
    assert point_reflector_frame.samples.shape == (TD4.n_channels, TD4.rx_samples)
    assert point_reflector_frame.samples.dtype == np.float64
    assert point_reflector_frame.sample_rate == TD4.rx_sample_rate
    assert point_reflector_frame.provenance["generator"] == "single_inclusion"


def test_point_reflector_time_of_flight(point_reflector_frame):
    tof, _ = matched_tof_and_amp(
        point_reflector_frame, TD4, GRID4, (TOF_TRUE - 3e-6, TOF_TRUE + 4e-6), 8
    )
    src = make_tone_burst(GRID4, TD4)
    assert abs(tof - TOF_TRUE) < 0.4e-6  # within the full-scale pulse length
    assert abs(tof - TOF_TRUE) < src.duration


def test_planar_interface_reflection_ratio(interface_frames):
    window = (TOF_TRUE - 2.5e-6, TOF_TRUE + 3.5e-6)
    _, amp_high = matched_tof_and_amp(interface_frames["high"], TD4, GRID4, window)
    _, amp_cal = matched_tof_and_amp(interface_frames["cal"], TD4, GRID4, window)
    r_cal = abs((1300.0 - 1540.0) / (1300.0 + 1540.0))
    r_measured = amp_high / amp_cal * r_cal
    r_analytic = (1700.0 - 1540.0) / (1700.0 + 1540.0)
    assert abs(r_measured - r_analytic) / r_analytic < 0.10


def test_quiet_medium_echo_window(quiet_and_strong_frames):
    quiet, strong = quiet_and_strong_frames
    src = make_tone_burst(GRID4, TD4)
    fs = TD4.rx_sample_rate
    lo = int((TOF_TRUE - src.duration) * fs)
    hi = int((TOF_TRUE + 2 * src.duration) * fs)
    ch = TD4.n_channels // 2
    sl = slice(ch - 8, ch + 8)
    e_quiet = np.sum(quiet.samples[sl, lo:hi] ** 2)
    e_echo = np.sum(strong.samples[sl, lo:hi] ** 2)
    assert 10 * np.log10(e_quiet / e_echo) < -60.0


# ---------------------------------------------------------------------------
# conservation, linearity, determinism


def test_lossless_energy_conservation():
    sample = uniform_phantom(GRID8)
    st = WaveStepper(
        sample.sos, sample.density, GRID8,
        enable_attenuation=False, enable_boundary=False, pad=0, track_energy=True,
    )
    cols = np.arange(GRID8.nx // 2 - 20, GRID8.nx // 2 + 20)
    n_src = 40
    # stop before the wavefront reaches the closed-box walls
    n_steps = int((GRID8.nz // 2 - 8) * GRID8.dx / 1540.0 / GRID8.dt)
    energies = []
    for n in range(n_steps):
        st.step()
        if n < n_src:
            st.inject(GRID8.nz // 2, cols, np.sin(2 * np.pi * TD8.center_freq * n * GRID8.dt))
        elif n > n_src:
            energies.append(st.energy())
    energies = np.asarray(energies)
    drift = np.abs(energies - energies[0]).max() / energies[0]
    assert drift < 0.01
    assert drift < 1e-8  # the discrete invariant is conserved to roundoff


def test_solver_linearity():
    zi = round(0.019 / GRID8.dx)

    def build():
        s = uniform_phantom(GRID8)
        s.density[zi : zi + 2, GRID8.nx // 2] = 2040.0
        return s

    base = simulate(build(), GRID8, TD8)
    scaled_src = make_tone_burst(GRID8, TD8)
    scaled_src.waveform = scaled_src.waveform * 3.7
    scaled = simulate(build(), GRID8, TD8, source=scaled_src)
    err = np.abs(scaled.samples - 3.7 * base.samples).max()
    assert err / np.abs(3.7 * base.samples).max() < 1e-9


def test_simulate_deterministic():
    s1 = uniform_phantom(GRID8)
    s2 = uniform_phantom(GRID8)
    f1 = simulate(s1, GRID8, TD8)
    f2 = simulate(s2, GRID8, TD8)
    assert f1.samples.tobytes() == f2.samples.tobytes()


def test_plane_wave_speed_between_probes():
    """Differential arrival between two depths matches d/c within 2 dt."""
    sample = uniform_phantom(GRID8)
    st = WaveStepper(sample.sos, sample.density, GRID8)
    src = make_tone_burst(GRID8, TD8)
    cols = TD8.element_columns(GRID8).reshape(-1)
    probe_cols = np.arange(GRID8.nx // 2 - 8, GRID8.nx // 2 + 8)
    d1, d2 = round(0.010 / GRID8.dx), round(0.028 / GRID8.dx)
    # window must contain the full pulse footprint at the deeper probe
    n_steps = int((0.028 / 1540.0 + 3 * src.duration) / GRID8.dt)
    tr = np.empty((n_steps, 2))
    for n in range(n_steps):
        st.step()
        if n < src.waveform.size and src.waveform[n] != 0.0:
            st.inject(0, cols, src.waveform[n])
        tr[n, 0] = st.read(d1, probe_cols).mean()
        tr[n, 1] = st.read(d2, probe_cols).mean()

    def arrival(x):
        xc = np.correlate(x, src.waveform, mode="full")
        lags = np.arange(-src.waveform.size + 1, x.size)
        return lags[np.argmax(np.abs(hilbert(xc)))]

    dt_steps = arrival(tr[:, 1]) - arrival(tr[:, 0])
    expected = (d2 - d1) * GRID8.dx / 1540.0
    assert abs(dt_steps * GRID8.dt - expected) <= 2 * GRID8.dt


def test_attenuation_calibrated_at_transmit_frequency():
    """One-way decay matches the configured dB/(MHz*cm) within 10%."""
    d1, d2 = round(0.010 / GRID8.dx), round(0.028 / GRID8.dx)
    amps = {}
    for atten in (0.0, 0.75):
        sample = uniform_phantom(GRID8, atten=atten)
        st = WaveStepper(
            sample.sos, sample.density, GRID8,
            attenuation_db_mhz_cm=atten, attenuation_freq=TD8.center_freq,
        )
        src = make_tone_burst(GRID8, TD8)
        cols = TD8.element_columns(GRID8).reshape(-1)
        probe_cols = np.arange(GRID8.nx // 2 - 8, GRID8.nx // 2 + 8)
        n_steps = int(0.032 / 1540.0 / GRID8.dt)
        tr = np.empty((n_steps, 2))
        for n in range(n_steps):
            st.step()
            if n < src.waveform.size and src.waveform[n] != 0.0:
                st.inject(0, cols, src.waveform[n])
            tr[n, 0] = st.read(d1, probe_cols).mean()
            tr[n, 1] = st.read(d2, probe_cols).mean()
        env = np.abs(hilbert(tr, axis=0))
        amps[atten] = env[:, 1].max() / env[:, 0].max()
    loss_db = 20 * np.log10(amps[0.0] / amps[0.75])
    expected_db = 0.75 * (TD8.center_freq / 1e6) * ((d2 - d1) * GRID8.dx * 100.0)
    assert abs(loss_db - expected_db) / expected_db < 0.10


# ---------------------------------------------------------------------------
# error contracts


def test_cfl_violation_raises_before_stepping():
    sample = uniform_phantom(GRID8, sos=5000.0)
    with pytest.raises(StabilityError):
        WaveStepper(sample.sos, sample.density, GRID8)


def test_nonpositive_fields_rejected():
    sample = uniform_phantom(GRID8)
    sample.sos[0, 0] = 0.0
    with pytest.raises(ValueError):
        WaveStepper(sample.sos, sample.density, GRID8)


def test_divergence_reports_step_index():
    sample = uniform_phantom(GRID8)
    sample.sos[50, 50] = np.nan  # slips past the positivity check, then blows up
    with pytest.raises(DivergenceError) as exc:
        simulate(sample, GRID8, TD8)
    assert exc.value.step > 0


def test_unknown_backend_rejected():
    sample = uniform_phantom(GRID8)
    with pytest.raises(ValueError):
        WaveStepper(sample.sos, sample.density, GRID8, backend="fortran")


# ---------------------------------------------------------------------------
# receive resampling


def test_resampler_reproduces_band_limited_tone():
    fs_in = 1.0 / GRID8.dt
    fs_out = TD8.rx_sample_rate
    f0 = 0.6e6
    t_in = np.arange(4000) / fs_in
    x = np.sin(2 * np.pi * f0 * t_in)
    n_out = int(3500 / fs_in * fs_out)
    y = resample_bandlimited(x, fs_in, fs_out, n_out)
    t_out = np.arange(n_out) / fs_out
    expected = np.sin(2 * np.pi * f0 * t_out)
    core = slice(50, n_out - 50)  # away from edge-truncated taps
    err = np.sqrt(np.mean((y[core] - expected[core]) ** 2))
    assert err < 1e-2


def test_backends_bit_identical():
    from sosgen.solver import has_compiled_kernels

    if not has_compiled_kernels():
        pytest.skip("compiled kernels unavailable")
    rng = np.random.default_rng(0)
    sos = 1500.0 + 100.0 * rng.random((GRID8.nz, GRID8.nx))
    rho = 1020.0 * (1.0 + 0.03 * (rng.random((GRID8.nz, GRID8.nx)) - 0.5))
    fields = {}
    for backend in ("python", "cython"):
        st = WaveStepper(
            sos, rho, GRID8,
            attenuation_db_mhz_cm=0.75, attenuation_freq=TD8.center_freq,
            backend=backend,
        )
        for n in range(150):
            st.step()
            if n < 30:
                st.inject(0, np.arange(100, 200), np.sin(0.3 * n))
        fields[backend] = st.p
    assert np.array_equal(fields["python"], fields["cython"])
