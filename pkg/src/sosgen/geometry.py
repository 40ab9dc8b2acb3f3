"""Simulation grid, transducer array, and field-of-view conventions.

All other modules share these value types. The full-scale preset models a
192-channel linear array (200 um pitch, 5 MHz) over a 3.8 x 7.6 cm medium
discretized as a 1536 x 3072 grid; desk-scale presets divide the counts by
2/4/8 while preserving the physical extents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# physical extents of the simulated medium (kept fixed across scales)
DEPTH_EXTENT_M = 0.038
WIDTH_EXTENT_M = 0.076

FULL_NZ = 1536
FULL_NX = 3072
FULL_DT = 5.7692e-9
FULL_CFL = 0.3
FULL_N_CHANNELS = 192
FULL_PITCH = 200e-6
FULL_CENTER_FREQ = 5e6
FULL_RX_RATE = 40e6
FULL_RX_SAMPLES = 2048

POINTS_PER_CHANNEL = 7  # active grid points per element
KERF_POINTS = 1

# desk-scale time step is derived from CFL at the top of the SoS range
C_MAX = 1700.0
C_REF = 1540.0

VALID_DIVISORS = (2, 4, 8)


class ConfigurationError(ValueError):
    """Invalid grid/transducer configuration."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform 2D simulation grid (depth-major: nz rows x nx columns)."""

    nz: int
    nx: int
    dx: float
    dt: float
    cfl: float
    n_time_steps: int

    def __post_init__(self):
        if self.nz < 1 or self.nx < 1:
            raise ConfigurationError("grid counts must be >= 1")
        if self.dx <= 0 or self.dt <= 0:
            raise ConfigurationError("dx and dt must be positive")

    def derived_cfl(self, c: float = C_REF) -> float:
        """Courant number c*dt/dx actually realized at speed ``c``."""
        return c * self.dt / self.dx

    @property
    def depth_extent(self) -> float:
        return self.nz * self.dx

    @property
    def width_extent(self) -> float:
        return self.nx * self.dx


@dataclass(frozen=True)
class TransducerSpec:
    """Linear array centered over the grid's lateral midline.

    ``element_positions`` are nominal element centers in meters, with x = 0
    at the lateral midline. They are exactly symmetric; the mapping to grid
    columns (``element_columns``) rounds to the nearest column, so the
    discrete aperture midpoint may sit half a grid point off the nominal
    center.
    """

    n_channels: int
    pitch: float
    points_per_channel: int
    center_freq: float
    tx_cycles: int
    rx_sample_rate: float
    rx_samples: int
    element_positions: np.ndarray = field(repr=False)

    def element_columns(self, grid: GridSpec) -> np.ndarray:
        """Active grid columns per element, shape (n_channels, points_per_channel).

        Elements tile the centered aperture in pitch cells of
        ``points_per_channel`` active points followed by one kerf point.
        """
        pitch_points = self.points_per_channel + KERF_POINTS
        offset = (grid.nx - pitch_points * self.n_channels) // 2
        if offset < 0:
            raise ConfigurationError("transducer aperture exceeds the grid")
        starts = offset + pitch_points * np.arange(self.n_channels, dtype=np.int64)
        cols = starts[:, None] + np.arange(self.points_per_channel, dtype=np.int64)[None, :]
        return cols


@dataclass(frozen=True)
class FieldOfView:
    """Recovered region: the central nz x nz square directly under the array."""

    width: float
    depth: float
    origin: int  # first lateral grid column of the recovered region

    def gt_shape(self, grid: GridSpec) -> tuple[int, int]:
        """Ground-truth lattice after the factor-4 downsample."""
        return (grid.nz // 4, grid.nz // 4)


def _element_positions(n_channels: int, pitch_grid_points: int, dx: float) -> np.ndarray:
    idx = np.arange(n_channels, dtype=np.float64)
    return (idx - (n_channels - 1) / 2.0) * (pitch_grid_points * dx)


def _n_time_steps(rx_samples: int, rx_rate: float, dt: float) -> int:
    duration = (rx_samples - 1) / rx_rate
    return int(math.ceil(duration / dt)) + 1


def make_full_scale() -> tuple[GridSpec, TransducerSpec, FieldOfView]:
    """Full-resolution configuration: 1536x3072 grid, dt=5.7692 ns, 192 channels."""
    dx = DEPTH_EXTENT_M / FULL_NZ
    grid = GridSpec(
        nz=FULL_NZ,
        nx=FULL_NX,
        dx=dx,
        dt=FULL_DT,
        cfl=FULL_CFL,
        n_time_steps=_n_time_steps(FULL_RX_SAMPLES, FULL_RX_RATE, FULL_DT),
    )
    pitch_points = POINTS_PER_CHANNEL + KERF_POINTS
    transducer = TransducerSpec(
        n_channels=FULL_N_CHANNELS,
        pitch=FULL_PITCH,
        points_per_channel=POINTS_PER_CHANNEL,
        center_freq=FULL_CENTER_FREQ,
        tx_cycles=2,
        rx_sample_rate=FULL_RX_RATE,
        rx_samples=FULL_RX_SAMPLES,
        element_positions=_element_positions(FULL_N_CHANNELS, pitch_points, dx),
    )
    fov = FieldOfView(
        width=DEPTH_EXTENT_M,
        depth=DEPTH_EXTENT_M,
        origin=(FULL_NX - FULL_NZ) // 2,
    )
    return grid, transducer, fov


def make_desk_scale(scale_divisor: int) -> tuple[GridSpec, TransducerSpec, FieldOfView]:
    """Scaled-down preset preserving physical extents.

    Grid counts, channel count, receive samples, receive rate, and center
    frequency are divided by the divisor; dx grows to keep the 3.8 x 7.6 cm
    extents; dt comes from CFL=0.3 at the 1700 m/s top of the SoS range so
    any valid phantom is stable; the frequency scaling keeps the
    points-per-wavelength of the full-scale configuration.
    """
    if scale_divisor not in VALID_DIVISORS:
        raise ConfigurationError(
            f"scale divisor must be one of {VALID_DIVISORS}, got {scale_divisor!r}"
        )
    k = scale_divisor
    nz = FULL_NZ // k
    nx = FULL_NX // k
    dx = DEPTH_EXTENT_M / nz
    dt = FULL_CFL * dx / C_MAX
    rx_rate = FULL_RX_RATE / k
    rx_samples = FULL_RX_SAMPLES // k
    grid = GridSpec(
        nz=nz,
        nx=nx,
        dx=dx,
        dt=dt,
        cfl=FULL_CFL,
        n_time_steps=_n_time_steps(rx_samples, rx_rate, dt),
    )
    pitch_points = POINTS_PER_CHANNEL + KERF_POINTS
    n_channels = FULL_N_CHANNELS // k
    transducer = TransducerSpec(
        n_channels=n_channels,
        pitch=pitch_points * dx,
        points_per_channel=POINTS_PER_CHANNEL,
        center_freq=FULL_CENTER_FREQ / k,
        tx_cycles=2,
        rx_sample_rate=rx_rate,
        rx_samples=rx_samples,
        element_positions=_element_positions(n_channels, pitch_points, dx),
    )
    fov = FieldOfView(width=DEPTH_EXTENT_M, depth=DEPTH_EXTENT_M, origin=(nx - nz) // 2)
    return grid, transducer, fov


SCALE_PRESETS = {
    "full": make_full_scale,
    "paper": make_full_scale,  # accepted alias for the full-resolution preset
    "desk2": lambda: make_desk_scale(2),
    "desk4": lambda: make_desk_scale(4),
    "desk8": lambda: make_desk_scale(8),
}


def center_freq_for_grid(grid: GridSpec) -> float:
    """Transmit frequency that keeps the full-scale points-per-wavelength on ``grid``."""
    return FULL_CENTER_FREQ * (DEPTH_EXTENT_M / FULL_NZ) / grid.dx


def make_scale(name: str) -> tuple[GridSpec, TransducerSpec, FieldOfView]:
    try:
        factory = SCALE_PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown scale preset {name!r}") from None
    return factory()


_GRID_KEYS = {"nz", "nx", "dx", "dt", "cfl", "n_time_steps"}


def grid_from_config(doc: dict) -> GridSpec:
    """Build a GridSpec from a JSON-style mapping; unknown keys are rejected."""
    unknown = set(doc) - _GRID_KEYS
    if unknown:
        raise ConfigurationError(f"unknown grid config keys: {sorted(unknown)}")
    missing = _GRID_KEYS - set(doc)
    if missing:
        raise ConfigurationError(f"missing grid config keys: {sorted(missing)}")
    return GridSpec(
        nz=int(doc["nz"]),
        nx=int(doc["nx"]),
        dx=float(doc["dx"]),
        dt=float(doc["dt"]),
        cfl=float(doc["cfl"]),
        n_time_steps=int(doc["n_time_steps"]),
    )
