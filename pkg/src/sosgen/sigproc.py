"""RF preprocessing chain and channel-data corruption operators.

The preprocessing chain runs in a fixed order: time-gain compensation,
head muting, per-channel normalization, then quantization noise. The
corruption operators (additive white Gaussian noise at a target SNR and
per-channel constant phase rotation) act on raw frames; corrupted data is
re-preprocessed afterwards.

All operators are pure: they return new frames and never mutate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .solver import RfFrame


class SigprocInputError(ValueError):
    """Operator precondition violated."""


@dataclass
class PreprocConfig:
    tgc_alpha: float = 0.75      # dB/(MHz*cm)
    tgc_sos: float = 1540.0      # m/s assumed for depth conversion
    tgc_freq_mhz: float = 5.0
    mute_samples: int = 100
    quant_bits: int = 12
    add_quant_noise: bool = True

    def __post_init__(self):
        if not 8 <= self.quant_bits <= 16:
            raise SigprocInputError("quantization depth must be within [8, 16] bits")
        if self.mute_samples < 0:
            raise SigprocInputError("mute_samples must be non-negative")


@dataclass
class CorruptionConfig:
    awgn_target_snr_db: float | None = None
    phase_range_rad: float | None = None
    noise_seed: int = 0

    def __post_init__(self):
        if self.phase_range_rad is not None and self.phase_range_rad < 0:
            raise SigprocInputError("phase range must be non-negative")


def _derive(frame: RfFrame, samples: np.ndarray, **extra) -> RfFrame:
    provenance = dict(frame.provenance)
    provenance.update(extra)
    return RfFrame(samples=samples, sample_rate=frame.sample_rate, provenance=provenance)


def tgc_gain(t: np.ndarray, cfg: PreprocConfig) -> np.ndarray:
    """Gain at receive time ``t``: 10^(alpha * f_MHz * two-way-path-cm / 20)."""
    path_cm = cfg.tgc_sos * t * 100.0
    return 10.0 ** (cfg.tgc_alpha * cfg.tgc_freq_mhz * path_cm / 20.0)


def tgc(frame: RfFrame, cfg: PreprocConfig) -> RfFrame:
    t = np.arange(frame.samples.shape[1]) / frame.sample_rate
    return _derive(frame, frame.samples * tgc_gain(t, cfg)[None, :], tgc=True)


def mute_head(frame: RfFrame, n: int) -> RfFrame:
    if not 0 <= n < frame.samples.shape[1]:
        raise SigprocInputError(
            f"mute count {n} out of range for {frame.samples.shape[1]} samples"
        )
    out = frame.samples.copy()
    out[:, :n] = 0.0
    return _derive(frame, out, muted_samples=n)


def normalize_channels(frame: RfFrame) -> RfFrame:
    """Per channel: subtract the mean, then divide by the max absolute value.

    All-zero channels are left as zeros and flagged in provenance.
    """
    x = frame.samples
    centered = x - x.mean(axis=1, keepdims=True)
    peak = np.abs(centered).max(axis=1, keepdims=True)
    dead = peak[:, 0] == 0.0
    peak[dead] = 1.0
    out = centered / peak
    out[dead] = 0.0
    return _derive(
        frame, out, normalized=True, dead_channels=np.flatnonzero(dead).tolist()
    )


def add_quant_noise(frame: RfFrame, bits: int, seed: int) -> RfFrame:
    """Uniform noise in [-q/2, q/2] with q = 2 / 2^bits (full scale 2)."""
    if np.abs(frame.samples).max() > 1.0 + 1e-9:
        raise SigprocInputError("frame must be normalized to [-1, 1] before quantization noise")
    q = 2.0 / (2**bits)
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-q / 2.0, q / 2.0, size=frame.samples.shape)
    return _derive(frame, frame.samples + noise, quant_bits=bits, quant_seed=seed)


def preprocess(frame: RfFrame, cfg: PreprocConfig, seed: int = 0) -> RfFrame:
    """Appendix-style chain in fixed order: tgc, mute, normalize, quantize."""
    out = tgc(frame, cfg)
    out = mute_head(out, cfg.mute_samples)
    out = normalize_channels(out)
    if cfg.add_quant_noise:
        out = add_quant_noise(out, cfg.quant_bits, seed)
    return out


def signal_power(frame: RfFrame) -> float:
    """Mean squared amplitude over nonzero samples (the muted head drops out)."""
    x = frame.samples
    nz = x != 0.0
    n = int(nz.sum())
    if n == 0:
        raise SigprocInputError("frame has no nonzero samples")
    return float(np.sum(x[nz] ** 2) / n)


def add_awgn(frame: RfFrame, target_snr_db: float | None, seed: int) -> RfFrame:
    """White Gaussian noise at P_n = P_s / 10^(SNR/10); None disables."""
    if target_snr_db is None or np.isinf(target_snr_db):
        return frame
    p_s = signal_power(frame)
    p_n = p_s / 10.0 ** (target_snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, np.sqrt(p_n), size=frame.samples.shape)
    return _derive(frame, frame.samples + noise, awgn_snr_db=target_snr_db, awgn_seed=seed)


def add_phase_noise(frame: RfFrame, range_rad: float | None, seed: int) -> RfFrame:
    """Rotate each channel's analytic signal by a constant random phase.

    The per-channel offset is uniform in [-range, +range]. The rotation is
    applied to the one-sided spectrum between DC and Nyquist (those two
    bins must stay real and carry nothing for band-limited RF), so the
    magnitude spectrum is preserved exactly.
    """
    if range_rad is None:
        return frame
    if range_rad < 0:
        raise SigprocInputError("phase range must be non-negative")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(-range_rad, range_rad, size=frame.samples.shape[0])
    n = frame.samples.shape[1]
    spectrum = np.fft.rfft(frame.samples, axis=1)
    hi = spectrum.shape[1] - 1 if n % 2 == 0 else spectrum.shape[1]
    spectrum[:, 1:hi] *= np.exp(1j * phases)[:, None]
    rotated = np.fft.irfft(spectrum, n=n, axis=1)
    return _derive(frame, rotated, phase_range_rad=range_rad, phase_seed=seed)


def corrupt(frame: RfFrame, cfg: CorruptionConfig) -> RfFrame:
    """Apply the configured corruptions to a raw frame."""
    out = add_phase_noise(frame, cfg.phase_range_rad, cfg.noise_seed)
    out = add_awgn(out, cfg.awgn_target_snr_db, cfg.noise_seed + 1)
    return out
