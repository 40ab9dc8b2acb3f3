"""Digital phantom generators and ground-truth map production.

Four generators produce co-registered SoS/density fields plus masks:

* ``gen_ellipsoids``  -- homogeneous background with 1-5 random ellipses
* ``gen_from_image``  -- grayscale image patch mapped to an SoS medium
* ``gen_layered``     -- background + one layer + one embedded inclusion
* ``gen_single_inclusion`` -- probe phantom with controlled echogenicity,
  scatterer fraction, and SoS contrast

Speckle lives in two places: density-domain reflectors (mean 2 per
wavelength^2, +-3% density variation) and SoS-domain scatterers (a random
subset of grid points carrying a small positive multiplicative SoS
perturbation). The structural ``sos`` field stays clean; the solver input
is ``PhantomSample.sim_sos()`` which overlays the scatterers. Echogenicity
classes act on the scatterer overlay only.

Every generator is a pure function of (seed, configuration): repeated
calls are bit-identical.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .geometry import FieldOfView, GridSpec, center_freq_for_grid

SOS_MIN = 1300.0
SOS_MAX = 1700.0
BACKGROUND_DENSITY = 1020.0
ATTENUATION_DB_MHZ_CM = 0.75
ALPHA_POWER = 1.5
BONA = 9.63

REFLECTORS_PER_WAVELENGTH_SQ = 2.0
DENSITY_VARIATION = 0.03
SCATTERER_FRACTION_DEFAULT = 0.10
SCATTERER_DELTA_MAX = 0.02       # base SoS perturbation drawn from [0, 2%]
ECHO_FACTOR_LOW = 1.044          # echogenicity scaling range for modified
ECHO_FACTOR_HIGH = 1.055         # scatterers (4.4% to 5.5%)
ECHO_MODIFIED_FRACTION = 0.10

ECHOGENICITY_CLASSES = ("anechoic", "hypoechoic", "isoechoic", "hyperechoic")

RADIUS_LATERAL_RANGE = (2e-3, 20e-3)
RADIUS_AXIAL_RANGE = (2e-3, 10e-3)
ROTATION_RANGE_DEG = (-60.0, 60.0)
INCLUSION_COUNT_RANGE = (1, 5)
LAYER_THICKNESS_RANGE = (0.005, 0.02)

IMAGE_PATCH_SHAPE = (384, 768)
PATCH_DARK_INTENSITY = 0.05      # "dark" pixel: below 5% of full scale
PATCH_DARK_FRACTION = 0.20       # reject patch if more than 20% dark
PATCH_MAX_ATTEMPTS = 100
IMAGE_ECHO_SOS_HIGH = 1550.0
IMAGE_ECHO_SOS_LOW = 1450.0


class PhantomInputError(ValueError):
    """Invalid input to a phantom generator."""


class GenerationError(RuntimeError):
    """A generator could not produce a valid sample."""


@dataclass
class EllipsoidParams:
    """One rotated elliptical inclusion."""

    center: tuple[float, float]  # (z, x) meters from the grid's top-left
    radius_lateral: float
    radius_axial: float
    rotation: float              # degrees
    sos_value: float

    def __post_init__(self):
        if not RADIUS_LATERAL_RANGE[0] <= self.radius_lateral <= RADIUS_LATERAL_RANGE[1]:
            raise PhantomInputError("lateral radius out of range")
        if not RADIUS_AXIAL_RANGE[0] <= self.radius_axial <= RADIUS_AXIAL_RANGE[1]:
            raise PhantomInputError("axial radius out of range")
        if not ROTATION_RANGE_DEG[0] <= self.rotation <= ROTATION_RANGE_DEG[1]:
            raise PhantomInputError("rotation out of range")
        if not SOS_MIN <= self.sos_value <= SOS_MAX:
            raise PhantomInputError("SoS value out of range")


@dataclass
class InclusionSpec:
    """Controlled inclusion for probe phantoms and sweeps."""

    echogenicity: str
    scatterer_fraction: float = SCATTERER_FRACTION_DEFAULT
    sos_contrast: float = 0.0
    center: tuple[float, float] | None = None  # default: center of the recovered region
    radius_lateral: float = 8e-3
    radius_axial: float = 6e-3
    rotation: float = 0.0

    def __post_init__(self):
        if self.echogenicity not in ECHOGENICITY_CLASSES:
            raise PhantomInputError(f"unknown echogenicity class {self.echogenicity!r}")
        if not 0.0 <= self.scatterer_fraction <= 0.6:
            raise PhantomInputError("scatterer fraction must be in [0, 0.6]")


@dataclass
class LayerParams:
    layer_top_depth: float
    thickness: float
    layer_sos: float
    layer_echogenicity: str
    embedded_inclusion: InclusionSpec

    def __post_init__(self):
        if not LAYER_THICKNESS_RANGE[0] <= self.thickness <= LAYER_THICKNESS_RANGE[1]:
            raise PhantomInputError("layer thickness out of range")


@dataclass
class SosMapGT:
    """Ground-truth SoS map on the downsampled recovered-region lattice."""

    values: np.ndarray
    resolution: float  # meters per pixel


@dataclass
class PhantomSample:
    """Co-registered 2D medium fields plus generator metadata.

    ``sos`` is the structural map (the ground-truth source). The solver
    consumes ``sim_sos()``/``density``, where the SoS-domain scatterer
    overlay (``scatter_idx``/``scatter_delta``, flat indices into the
    field) has been applied. Treated as immutable after creation.
    """

    sos: np.ndarray
    density: np.ndarray
    attenuation_coeff: float
    alpha_power: float
    bona: float
    inclusion_mask: np.ndarray | None
    skin_or_layer_mask: np.ndarray | None
    seed: int
    generator_tag: str
    scatter_idx: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    scatter_delta: np.ndarray = field(default_factory=lambda: np.empty(0, np.float64))
    params: dict = field(default_factory=dict)

    def sim_sos(self) -> np.ndarray:
        """Simulation SoS field: structural map with the scatterer overlay."""
        out = self.sos.copy()
        if self.scatter_idx.size:
            out.flat[self.scatter_idx] *= 1.0 + self.scatter_delta
        return out

    def replace(self, **kw) -> "PhantomSample":
        return dataclasses.replace(self, **kw)


def _homogeneous_sample(grid, sos_value, seed, tag, params) -> PhantomSample:
    shape = (grid.nz, grid.nx)
    return PhantomSample(
        sos=np.full(shape, sos_value, dtype=np.float64),
        density=np.full(shape, BACKGROUND_DENSITY, dtype=np.float64),
        attenuation_coeff=ATTENUATION_DB_MHZ_CM,
        alpha_power=ALPHA_POWER,
        bona=BONA,
        inclusion_mask=None,
        skin_or_layer_mask=None,
        seed=seed,
        generator_tag=tag,
        params=params,
    )


def ellipse_mask(
    grid: GridSpec,
    center: tuple[float, float],
    radius_lateral: float,
    radius_axial: float,
    rotation: float,
) -> np.ndarray:
    """Boolean field of cells whose centers fall inside the rotated ellipse."""
    z0, x0 = center
    theta = np.deg2rad(rotation)
    # bounding box keeps the evaluation local
    r = max(radius_lateral, radius_axial)
    i0 = max(int((z0 - r) / grid.dx) - 1, 0)
    i1 = min(int((z0 + r) / grid.dx) + 2, grid.nz)
    j0 = max(int((x0 - r) / grid.dx) - 1, 0)
    j1 = min(int((x0 + r) / grid.dx) + 2, grid.nx)
    mask = np.zeros((grid.nz, grid.nx), dtype=bool)
    if i0 >= i1 or j0 >= j1:
        return mask
    z = (np.arange(i0, i1) + 0.5) * grid.dx - z0
    x = (np.arange(j0, j1) + 0.5) * grid.dx - x0
    zz, xx = np.meshgrid(z, x, indexing="ij")
    u = np.cos(theta) * xx + np.sin(theta) * zz
    v = -np.sin(theta) * xx + np.cos(theta) * zz
    inside = (u / radius_lateral) ** 2 + (v / radius_axial) ** 2 <= 1.0
    mask[i0:i1, j0:j1] = inside
    return mask


def _ellipsoid_mask(grid: GridSpec, e: EllipsoidParams) -> np.ndarray:
    return ellipse_mask(grid, e.center, e.radius_lateral, e.radius_axial, e.rotation)


def draw_ellipsoid_params(rng: np.random.Generator, grid: GridSpec) -> EllipsoidParams:
    """Single inclusion draw; centers range over the full medium."""
    return EllipsoidParams(
        center=(
            rng.uniform(0.0, grid.nz * grid.dx),
            rng.uniform(0.0, grid.nx * grid.dx),
        ),
        radius_lateral=rng.uniform(*RADIUS_LATERAL_RANGE),
        radius_axial=rng.uniform(*RADIUS_AXIAL_RANGE),
        rotation=rng.uniform(*ROTATION_RANGE_DEG),
        sos_value=rng.uniform(SOS_MIN, SOS_MAX),
    )


# ---------------------------------------------------------------------------
# speckle and echogenicity


def _choose(rng, pool, count):
    if count <= 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(pool, size=count, replace=False)).astype(np.int64)


def _apply_speckle(
    sample: PhantomSample,
    rng: np.random.Generator,
    grid: GridSpec,
    scatterer_fraction: float = SCATTERER_FRACTION_DEFAULT,
    inclusion_fraction: float | None = None,
    freq: float | None = None,
    sos_scatterers: bool = True,
) -> PhantomSample:
    if freq is None:
        freq = center_freq_for_grid(grid)
    n_cells = grid.nz * grid.nx

    # density-domain reflectors: Poisson count at 2 per wavelength^2
    lam = float(np.mean(sample.sos)) / freq
    area = (grid.nz * grid.dx) * (grid.nx * grid.dx)
    n_reflectors = int(rng.poisson(REFLECTORS_PER_WAVELENGTH_SQ * area / lam**2))
    n_reflectors = min(n_reflectors, n_cells)
    refl_idx = _choose(rng, n_cells, n_reflectors)
    density = sample.density.copy()
    density.flat[refl_idx] *= 1.0 + rng.uniform(
        -DENSITY_VARIATION, DENSITY_VARIATION, size=refl_idx.size
    )

    scatter_idx = np.empty(0, dtype=np.int64)
    scatter_delta = np.empty(0, dtype=np.float64)
    if sos_scatterers:
        if inclusion_fraction is None or sample.inclusion_mask is None:
            scatter_idx = _choose(rng, n_cells, round(scatterer_fraction * n_cells))
        else:
            flat_mask = sample.inclusion_mask.reshape(-1)
            inside = np.flatnonzero(flat_mask)
            outside = np.flatnonzero(~flat_mask)
            idx_out = outside[_choose(rng, outside.size, round(scatterer_fraction * outside.size))]
            idx_in = inside[_choose(rng, inside.size, round(inclusion_fraction * inside.size))]
            scatter_idx = np.sort(np.concatenate([idx_out, idx_in]))
        scatter_delta = rng.uniform(0.0, SCATTERER_DELTA_MAX, size=scatter_idx.size)

    return sample.replace(
        density=density, scatter_idx=scatter_idx, scatter_delta=scatter_delta
    )


def apply_speckle(
    sample: PhantomSample,
    seed: int,
    grid: GridSpec,
    scatterer_fraction: float = SCATTERER_FRACTION_DEFAULT,
    freq: float | None = None,
) -> PhantomSample:
    """Add density-domain reflectors and SoS-domain scatterers."""
    rng = np.random.default_rng(seed)
    return _apply_speckle(sample, rng, grid, scatterer_fraction=scatterer_fraction, freq=freq)


def _apply_echogenicity(
    sample: PhantomSample,
    mask: np.ndarray,
    klass: str,
    rng: np.random.Generator,
) -> PhantomSample:
    if klass not in ECHOGENICITY_CLASSES:
        raise PhantomInputError(f"unknown echogenicity class {klass!r}")
    if klass == "isoechoic":
        return sample
    in_mask = mask.reshape(-1)[sample.scatter_idx]
    if klass == "anechoic":
        keep = ~in_mask
        return sample.replace(
            scatter_idx=sample.scatter_idx[keep],
            scatter_delta=sample.scatter_delta[keep],
        )
    targets = np.flatnonzero(in_mask)
    n_mod = round(ECHO_MODIFIED_FRACTION * targets.size)
    chosen = targets[_choose(rng, targets.size, n_mod)]
    factors = rng.uniform(ECHO_FACTOR_LOW, ECHO_FACTOR_HIGH, size=chosen.size)
    delta = sample.scatter_delta.copy()
    if klass == "hyperechoic":
        delta[chosen] *= factors
    else:  # hypoechoic
        delta[chosen] /= factors
    return sample.replace(scatter_delta=delta)


def apply_echogenicity(
    sample: PhantomSample, mask: np.ndarray, klass: str, seed: int
) -> PhantomSample:
    """Modify the SoS-domain scatterers inside ``mask`` per echogenicity class."""
    if mask.shape != sample.sos.shape:
        raise PhantomInputError("mask shape does not match the sample fields")
    return _apply_echogenicity(sample, mask, klass, np.random.default_rng(seed))


# ---------------------------------------------------------------------------
# generators


def gen_ellipsoids(seed: int, grid: GridSpec) -> PhantomSample:
    """Homogeneous background with one to five random elliptical inclusions.

    Inclusion centers range over the full medium, so inclusions may fall
    outside the recovered region; overlapping inclusions are painted in
    draw order (later ones overwrite earlier ones).
    """
    rng = np.random.default_rng(seed)
    background_sos = rng.uniform(SOS_MIN, SOS_MAX)
    n_inclusions = int(rng.integers(INCLUSION_COUNT_RANGE[0], INCLUSION_COUNT_RANGE[1] + 1))
    drawn = [draw_ellipsoid_params(rng, grid) for _ in range(n_inclusions)]

    params = {
        "background_sos": background_sos,
        "ellipsoids": [dataclasses.asdict(e) for e in drawn],
    }
    sample = _homogeneous_sample(grid, background_sos, seed, "ellipsoids", params)
    union = np.zeros((grid.nz, grid.nx), dtype=bool)
    for e in drawn:
        m = _ellipsoid_mask(grid, e)
        sample.sos[m] = e.sos_value
        union |= m
    sample = sample.replace(inclusion_mask=union)
    sample = _apply_speckle(sample, rng, grid)
    return _apply_echogenicity(sample, union, "hyperechoic", rng)


def _full_scale_value(image: np.ndarray) -> float:
    if np.issubdtype(image.dtype, np.integer):
        return float(np.iinfo(image.dtype).max)
    return float(image.max())


def grayscale_patch_to_sos(patch: np.ndarray, grid_shape: tuple[int, int]) -> np.ndarray:
    """Smooth, resize (nearest-neighbor), and rescale a patch to SoS values.

    The min..max intensity range maps linearly onto [1300, 1700] m/s; a
    constant patch maps to the 1500 m/s midpoint.
    """
    smoothed = gaussian_filter(np.asarray(patch, dtype=np.float64), sigma=4.0)
    nz, nx = grid_shape
    rows = np.minimum(
        (np.arange(nz) + 0.5) * (smoothed.shape[0] / nz), smoothed.shape[0] - 1
    ).astype(np.int64)
    cols = np.minimum(
        (np.arange(nx) + 0.5) * (smoothed.shape[1] / nx), smoothed.shape[1] - 1
    ).astype(np.int64)
    resized = smoothed[np.ix_(rows, cols)]
    lo, hi = resized.min(), resized.max()
    if hi == lo:
        return np.full(grid_shape, 0.5 * (SOS_MIN + SOS_MAX))
    return SOS_MIN + (resized - lo) / (hi - lo) * (SOS_MAX - SOS_MIN)


def gen_from_image(
    image: np.ndarray,
    seed: int,
    grid: GridSpec,
    perturb_echogenicity: bool,
) -> PhantomSample:
    """Map a random patch of a grayscale image to an SoS medium.

    A 384x768 patch is drawn at random, rejecting patches dominated by
    dark pixels; the patch is smoothed (Gaussian, sigma 4 px), resized to
    the grid by nearest-neighbor, and linearly rescaled to [1300, 1700]
    m/s. With ``perturb_echogenicity``, 10% of the pixels mapped above
    1550 or below 1450 m/s get a 4.4-5.5% boost, creating echogenicity
    texture independent of structure. Only density-domain speckle is
    added; the map itself carries the SoS-domain heterogeneity.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise PhantomInputError("image must be 2D grayscale")
    ph, pw = IMAGE_PATCH_SHAPE
    if image.shape[0] < ph or image.shape[1] < pw:
        raise PhantomInputError(
            f"image must be at least {ph}x{pw} pixels, got {image.shape}"
        )
    rng = np.random.default_rng(seed)
    full_scale = _full_scale_value(image)
    dark_level = PATCH_DARK_INTENSITY * full_scale

    patch = None
    top = left = 0
    for _ in range(PATCH_MAX_ATTEMPTS):
        top = int(rng.integers(0, image.shape[0] - ph + 1))
        left = int(rng.integers(0, image.shape[1] - pw + 1))
        candidate = image[top : top + ph, left : left + pw]
        if np.mean(candidate < dark_level) <= PATCH_DARK_FRACTION:
            patch = candidate
            break
    if patch is None:
        raise GenerationError(
            f"no patch passed the dark-region threshold in {PATCH_MAX_ATTEMPTS} attempts"
        )

    sos = grayscale_patch_to_sos(patch, (grid.nz, grid.nx))
    n_perturbed = 0
    if perturb_echogenicity:
        eligible = np.flatnonzero((sos > IMAGE_ECHO_SOS_HIGH) | (sos < IMAGE_ECHO_SOS_LOW))
        n_perturbed = round(ECHO_MODIFIED_FRACTION * eligible.size)
        chosen = eligible[_choose(rng, eligible.size, n_perturbed)]
        sos.flat[chosen] *= rng.uniform(ECHO_FACTOR_LOW, ECHO_FACTOR_HIGH, size=chosen.size)

    params = {
        "patch_top": top,
        "patch_left": left,
        "perturb_echogenicity": bool(perturb_echogenicity),
        "n_perturbed": int(n_perturbed),
    }
    sample = _homogeneous_sample(grid, 0.0, seed, "image", params)
    sample = sample.replace(sos=sos)
    # structure comes from the image; speckle only in the density domain
    return _apply_speckle(sample, rng, grid, sos_scatterers=False)


def draw_layer_params(rng: np.random.Generator, grid: GridSpec) -> LayerParams:
    depth = grid.nz * grid.dx
    thickness = rng.uniform(*LAYER_THICKNESS_RANGE)
    top = rng.uniform(0.0, depth - thickness)
    layer_sos = rng.uniform(SOS_MIN, SOS_MAX)
    layer_echo = str(rng.choice(ECHOGENICITY_CLASSES))
    inclusion = _draw_contained_inclusion(rng, grid, top, thickness, layer_sos)
    return LayerParams(
        layer_top_depth=top,
        thickness=thickness,
        layer_sos=layer_sos,
        layer_echogenicity=layer_echo,
        embedded_inclusion=inclusion,
    )


def _rotated_half_extents(rl, ra, rot_deg):
    t = np.deg2rad(rot_deg)
    hz = np.hypot(ra * np.cos(t), rl * np.sin(t))
    hx = np.hypot(rl * np.cos(t), ra * np.sin(t))
    return hz, hx


def _draw_contained_inclusion(rng, grid, top, thickness, layer_sos) -> InclusionSpec:
    """Inclusion fully inside the layer in depth and inside the grid laterally.

    The inclusion SoS is drawn uniformly in [1300, 1700] m/s and stored as a
    contrast relative to the layer.
    """
    width = grid.nx * grid.dx
    half = 0.49 * thickness
    for _ in range(10_000):
        rl = rng.uniform(*RADIUS_LATERAL_RANGE)
        ra = rng.uniform(*RADIUS_AXIAL_RANGE)
        rot = rng.uniform(*ROTATION_RANGE_DEG)
        hz, hx = _rotated_half_extents(rl, ra, rot)
        if hz <= half:
            break
    else:
        rl = rng.uniform(*RADIUS_LATERAL_RANGE)
        ra = min(rng.uniform(*RADIUS_AXIAL_RANGE), half)
        rot = 0.0
        hz, hx = ra, rl
    cz = rng.uniform(top + hz, top + thickness - hz)
    cx = rng.uniform(hx, width - hx)
    return InclusionSpec(
        echogenicity=str(rng.choice(ECHOGENICITY_CLASSES)),
        sos_contrast=rng.uniform(SOS_MIN, SOS_MAX) - layer_sos,
        center=(cz, cx),
        radius_lateral=rl,
        radius_axial=ra,
        rotation=rot,
    )


def gen_layered(seed: int, grid: GridSpec) -> PhantomSample:
    """Layered medium with one elliptical inclusion embedded in the layer.

    Layer thickness is uniform in [0.5, 2] cm; layer and inclusion SoS are
    uniform in [1300, 1700] m/s; their echogenicity classes are drawn
    uniformly from the four classes.
    """
    rng = np.random.default_rng(seed)
    background_sos = rng.uniform(SOS_MIN, SOS_MAX)
    layer = draw_layer_params(rng, grid)
    inc = layer.embedded_inclusion

    params = {
        "background_sos": background_sos,
        "layer_top_depth": layer.layer_top_depth,
        "thickness": layer.thickness,
        "layer_sos": layer.layer_sos,
        "layer_echogenicity": layer.layer_echogenicity,
        "inclusion": dataclasses.asdict(inc),
    }
    sample = _homogeneous_sample(grid, background_sos, seed, "layered", params)

    i0 = int(round(layer.layer_top_depth / grid.dx))
    i1 = int(round((layer.layer_top_depth + layer.thickness) / grid.dx))
    layer_mask = np.zeros((grid.nz, grid.nx), dtype=bool)
    layer_mask[i0:i1, :] = True
    sample.sos[layer_mask] = layer.layer_sos

    inc_mask = ellipse_mask(
        grid, inc.center, inc.radius_lateral, inc.radius_axial, inc.rotation
    )
    sample.sos[inc_mask] = layer.layer_sos + inc.sos_contrast

    sample = sample.replace(inclusion_mask=inc_mask, skin_or_layer_mask=layer_mask)
    sample = _apply_speckle(sample, rng, grid)
    sample = _apply_echogenicity(sample, layer_mask & ~inc_mask, layer.layer_echogenicity, rng)
    return _apply_echogenicity(sample, inc_mask, inc.echogenicity, rng)


def gen_single_inclusion(
    spec: InclusionSpec,
    background_sos: float,
    seed: int,
    grid: GridSpec,
) -> PhantomSample:
    """Homogeneous background with one controlled centered inclusion.

    Realizes exactly the requested echogenicity class, scatterer fraction
    (inside the inclusion; the background keeps the 10% default), and SoS
    contrast. The structural ``sos`` field carries only the contrast, so a
    zero-contrast inclusion leaves it constant.
    """
    center = spec.center
    if center is None:
        depth = grid.nz * grid.dx
        center = (depth / 2.0, grid.nx * grid.dx / 2.0)
    params = {
        "background_sos": background_sos,
        "echogenicity": spec.echogenicity,
        "scatterer_fraction": spec.scatterer_fraction,
        "sos_contrast": spec.sos_contrast,
        "center": center,
        "radius_lateral": spec.radius_lateral,
        "radius_axial": spec.radius_axial,
        "rotation": spec.rotation,
    }
    rng = np.random.default_rng(seed)
    sample = _homogeneous_sample(grid, background_sos, seed, "single_inclusion", params)
    mask = ellipse_mask(
        grid, center, spec.radius_lateral, spec.radius_axial, spec.rotation
    )
    sample.sos[mask] = background_sos + spec.sos_contrast
    sample = sample.replace(inclusion_mask=mask)
    sample = _apply_speckle(
        sample, rng, grid, inclusion_fraction=spec.scatterer_fraction
    )
    return _apply_echogenicity(sample, mask, spec.echogenicity, rng)


# ---------------------------------------------------------------------------
# ground-truth production


def _block_mean_4(field: np.ndarray) -> np.ndarray:
    # bilinear sample at the 4x-downsampled pixel centers: the source
    # coordinate lands exactly between rows 4i+1 and 4i+2, so the weights
    # are 0.25 on a 2x2 block and a constant field is reproduced exactly
    return (
        field[1::4, 1::4] + field[1::4, 2::4] + field[2::4, 1::4] + field[2::4, 2::4]
    ) * 0.25


def crop_recovered_region(field: np.ndarray, fov_origin: int) -> np.ndarray:
    nz = field.shape[0]
    return field[:, fov_origin : fov_origin + nz]


def gt_downsample(sample: PhantomSample, fov: FieldOfView) -> SosMapGT:
    """Crop the central nz x nz recovered region and bilinear-downsample by 4."""
    field = sample.sos
    nz, nx = field.shape
    if nz % 4 != 0 or fov.origin + nz > nx:
        raise PhantomInputError(
            f"field shape {field.shape} incompatible with recovered-region crop"
        )
    cropped = crop_recovered_region(field, fov.origin)
    values = _block_mean_4(cropped)
    return SosMapGT(values=values, resolution=fov.depth / (nz // 4))


def downsample_mask(mask: np.ndarray, fov: FieldOfView) -> np.ndarray:
    """Mask counterpart of gt_downsample (majority of the bilinear weights)."""
    nz, nx = mask.shape
    if nz % 4 != 0 or fov.origin + nz > nx:
        raise PhantomInputError("mask shape incompatible with recovered-region crop")
    cropped = crop_recovered_region(mask.astype(np.float64), fov.origin)
    return _block_mean_4(cropped) >= 0.5


# ---------------------------------------------------------------------------
# synthetic texture fixtures (stand-ins for user-supplied grayscale images)


def synthetic_texture(seed: int, shape: tuple[int, int] = (768, 1024)) -> np.ndarray:
    """Tissue-like grayscale texture: multi-scale noise plus soft blobs.

    Returns a uint8 image suitable as input to ``gen_from_image``.
    """
    rng = np.random.default_rng(seed)
    base = gaussian_filter(rng.standard_normal(shape), sigma=24.0)
    base += 0.5 * gaussian_filter(rng.standard_normal(shape), sigma=8.0)
    yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
    for _ in range(int(rng.integers(2, 6))):
        cy = rng.uniform(0, shape[0])
        cx = rng.uniform(0, shape[1])
        ry = rng.uniform(shape[0] / 16, shape[0] / 4)
        rx = rng.uniform(shape[1] / 16, shape[1] / 4)
        blob = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        base += rng.uniform(-1.0, 1.0) * gaussian_filter(blob.astype(np.float64), sigma=6.0)
    lo, hi = base.min(), base.max()
    img = (base - lo) / (hi - lo) * 235.0 + 20.0  # keep away from the dark threshold
    return img.astype(np.uint8)
