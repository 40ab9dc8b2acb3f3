"""Delay-and-sum reconstruction of b-mode images from single plane-wave RF.

Zero-degree plane-wave transmit: the round trip to pixel (x, z) for
element i is (z + sqrt((x - x_i)^2 + z^2)) / c. Receive uses a dynamic
aperture at a fixed f-number with rectangular apodization and linear
sample interpolation (cubic available).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import hilbert

from .geometry import FieldOfView, GridSpec, TransducerSpec
from .solver import RfFrame

DYNAMIC_RANGE_DB = 45.0
F_NUMBER = 1.5


class BeamformInputError(ValueError):
    pass


@dataclass
class BmodeImage:
    pixels: np.ndarray  # dB, in [-dyn_range, 0]
    dyn_range: float
    assumed_sos: float


def image_lattice(fov: FieldOfView, grid: GridSpec, shape=None):
    """Pixel-center coordinates of the recovered region.

    x = 0 at the array center; z is depth below the array plane.
    """
    if shape is None:
        shape = fov.gt_shape(grid)
    nz_px, nx_px = shape
    z = (np.arange(nz_px) + 0.5) * (fov.depth / nz_px)
    x = (np.arange(nx_px) + 0.5) * (fov.width / nx_px) - fov.width / 2.0
    return z, x


def das(
    frame: RfFrame,
    transducer: TransducerSpec,
    fov: FieldOfView,
    grid: GridSpec,
    assumed_sos: float,
    shape: tuple[int, int] | None = None,
    f_number: float = F_NUMBER,
    t0: float = 0.0,
    interpolation: str = "linear",
) -> np.ndarray:
    """Beamformed amplitude on the field-of-view lattice.

    ``t0`` is an optional constant receive-time offset (e.g. the transmit
    pulse centroid) added to every delay.
    """
    if assumed_sos <= 0:
        raise BeamformInputError("assumed SoS must be positive")
    if interpolation not in ("linear", "cubic"):
        raise BeamformInputError(f"unknown interpolation {interpolation!r}")
    z, x = image_lattice(fov, grid, shape)
    fs = frame.sample_rate
    n_samples = frame.samples.shape[1]
    out = np.zeros((z.size, x.size))
    zz = z[:, None]
    for i, xi in enumerate(transducer.element_positions):
        tau = (zz + np.sqrt((x[None, :] - xi) ** 2 + zz**2)) / assumed_sos + t0
        pos = tau * fs
        aperture = np.abs(x[None, :] - xi) <= zz / (2.0 * f_number)
        trace = frame.samples[i]
        if interpolation == "linear":
            k = np.floor(pos).astype(np.int64)
            frac = pos - k
            valid = (k >= 0) & (k < n_samples - 1) & aperture
            k = np.clip(k, 0, n_samples - 2)
            vals = trace[k] * (1.0 - frac) + trace[k + 1] * frac
        else:
            k = np.floor(pos).astype(np.int64)
            frac = pos - k
            valid = (k >= 1) & (k < n_samples - 2) & aperture
            k = np.clip(k, 1, n_samples - 3)
            # Catmull-Rom spline through the four neighboring samples
            pm1, p0, p1, p2 = trace[k - 1], trace[k], trace[k + 1], trace[k + 2]
            vals = 0.5 * (
                2.0 * p0
                + frac * (p1 - pm1)
                + frac**2 * (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2)
                + frac**3 * (3.0 * (p0 - p1) + p2 - pm1)
            )
        out += np.where(valid, vals, 0.0)
    return out


def envelope(image: np.ndarray) -> np.ndarray:
    """Per-column magnitude of the analytic signal along depth."""
    if image.size == 0:
        return image.copy()
    return np.abs(hilbert(image, axis=0))


def log_compress(env: np.ndarray, dyn_range_db: float = DYNAMIC_RANGE_DB,
                 assumed_sos: float = 1540.0) -> BmodeImage:
    """20*log10(env / max), clipped below at -dyn_range."""
    if np.any(env < 0):
        raise BeamformInputError("envelope must be non-negative")
    peak = env.max()
    if peak <= 0:
        raise BeamformInputError("all-zero envelope cannot be log-compressed")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(env / peak)
    return BmodeImage(
        pixels=np.maximum(db, -dyn_range_db),
        dyn_range=dyn_range_db,
        assumed_sos=assumed_sos,
    )


def bmode(
    frame: RfFrame,
    transducer: TransducerSpec,
    fov: FieldOfView,
    grid: GridSpec,
    assumed_sos: float = 1540.0,
    dyn_range_db: float = DYNAMIC_RANGE_DB,
    **das_kwargs,
) -> BmodeImage:
    """Full chain: delay-and-sum, envelope detection, log compression."""
    beamformed = das(frame, transducer, fov, grid, assumed_sos, **das_kwargs)
    return log_compress(envelope(beamformed), dyn_range_db, assumed_sos)


def to_png_bytes(image: BmodeImage) -> bytes:
    """8-bit grayscale PNG of the b-mode image."""
    import io

    from PIL import Image

    gray = (image.pixels + image.dyn_range) / image.dyn_range * 255.0
    arr = np.clip(np.rint(gray), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()
