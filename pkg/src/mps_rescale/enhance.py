"""Resolution enhancement of categorical grids.

All methods take a coarse grid and an integer factor f and return a grid with
f times the cells per axis, cell sizes divided by f, and the origin shifted by
-cs*(f-1)/(2f) per axis so coarse and fine grids share the same physical
bounding box (cell-center registration: coarse center j sits at fine index
j*f + (f-1)/2).

Categories are never interpolated directly.  The kernel methods (bilinear,
bicubic, sinc) interpolate one indicator field per category and take the
argmax at each fine cell; "dfk" interpolates signed-distance fields by
ordinary kriging instead of a fixed kernel; "nearest" replicates cells, which
under this registration is exactly nearest-center resampling.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import ndimage

from .grid import CategoricalGrid, GridGeometry
from .kriging import KrigingConfig, KrigingResult, VariogramModel, krige_grid

__all__ = [
    "METHODS",
    "signed_distance",
    "fine_geometry",
    "enhance_nearest",
    "enhance_indicator",
    "enhance_df_kriging",
    "enhance",
    "default_df_variogram",
]

log = logging.getLogger(__name__)

METHODS = ("nearest", "bilinear", "bicubic", "sinc", "dfk")


def signed_distance(grid: CategoricalGrid, category: int) -> np.ndarray:
    """Signed Euclidean distance field of one category, in cell units.

    Cells of the category get +d, all others -d, where d is the center-to-
    center distance to the nearest cell of opposite membership.  Values are
    never 0 (adjacent opposite cells are 1 apart); a grid containing only one
    membership has no opposite cells and raises.  Returns a (ny, nx) array.
    """
    if not 0 <= category < grid.k:
        raise ValueError(f"category {category} out of range for k={grid.k}")
    mask = grid.values2d == category
    if mask.all() or not mask.any():
        raise ValueError(
            f"signed distance undefined: category {category} "
            f"{'fills' if mask.all() else 'is absent from'} the grid"
        )
    inside = ndimage.distance_transform_edt(mask)
    outside = ndimage.distance_transform_edt(~mask)
    return np.where(mask, inside, -outside)


def fine_geometry(g: GridGeometry, factor: int) -> GridGeometry:
    """Geometry refined by an integer factor, same physical bounding box."""
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    return GridGeometry(
        nx=g.nx * factor,
        ny=g.ny * factor,
        cell_size_x=g.cell_size_x / factor,
        cell_size_y=g.cell_size_y / factor,
        origin_x=g.origin_x - g.cell_size_x * (factor - 1) / (2.0 * factor),
        origin_y=g.origin_y - g.cell_size_y * (factor - 1) / (2.0 * factor),
    )


def enhance_nearest(grid: CategoricalGrid, factor: int) -> CategoricalGrid:
    """Replicate each cell into an f x f block of fine cells."""
    fine = fine_geometry(grid.geometry, factor)
    vals = np.repeat(np.repeat(grid.values2d, factor, axis=0), factor, axis=1)
    return CategoricalGrid(fine, grid.k, vals)


# ---------------------------------------------------------------------------
# Separable kernel resampling
# ---------------------------------------------------------------------------

def _fine_positions(n: int, factor: int) -> np.ndarray:
    """Fine cell centers in coarse index coordinates (coarse cell j at j)."""
    return (np.arange(n * factor) + 0.5) / factor - 0.5


def _resample_axis_linear(arr: np.ndarray, factor: int) -> np.ndarray:
    """Tent-kernel resampling along the last axis, clamp-to-edge."""
    n = arr.shape[-1]
    u = _fine_positions(n, factor)
    base = np.floor(u).astype(np.int64)
    t = u - base
    i0 = np.clip(base, 0, n - 1)
    i1 = np.clip(base + 1, 0, n - 1)
    return arr[..., i0] * (1.0 - t) + arr[..., i1] * t


def _cubic_weights(t: np.ndarray) -> list[np.ndarray]:
    # Cubic convolution (a = -0.5) taps at distances 1+t, t, 1-t, 2-t
    a = -0.5
    def near(s):
        return (a + 2.0) * s**3 - (a + 3.0) * s**2 + 1.0
    def far(s):
        return a * s**3 - 5.0 * a * s**2 + 8.0 * a * s - 4.0 * a
    return [far(1.0 + t), near(t), near(1.0 - t), far(2.0 - t)]


def _resample_axis_cubic(arr: np.ndarray, factor: int) -> np.ndarray:
    n = arr.shape[-1]
    u = _fine_positions(n, factor)
    base = np.floor(u).astype(np.int64)
    t = u - base
    weights = _cubic_weights(t)
    out = np.zeros(arr.shape[:-1] + (u.size,))
    for tap, w in zip((-1, 0, 1, 2), weights):
        idx = np.clip(base + tap, 0, n - 1)
        out += arr[..., idx] * w
    return out


def _resample_axis_sinc(arr: np.ndarray, factor: int) -> np.ndarray:
    """Periodic sinc resampling along the last axis.

    Zero-pads the discrete spectrum to f times the length, splitting the
    Nyquist bin of even-length inputs to keep the spectrum Hermitian, and
    applies a phase ramp for the half-cell registration shift before the
    inverse transform; the real part is kept.
    """
    n = arr.shape[-1]
    m = n * factor
    spec = np.fft.fft(arr, axis=-1)
    padded = np.zeros(arr.shape[:-1] + (m,), dtype=np.complex128)
    h = (n + 1) // 2  # positive-frequency bins excluding any Nyquist
    padded[..., :h] = spec[..., :h]
    if n % 2 == 0:
        # += so the two half-bins recombine when factor == 1 makes them alias
        padded[..., h] += 0.5 * spec[..., h]
        padded[..., m - h] += 0.5 * spec[..., h]
        padded[..., m - h + 1 :] = spec[..., h + 1 :]
    else:
        padded[..., m - (n - h) :] = spec[..., h:]
    # Shift by delta coarse cells so outputs sit at fine cell centers
    delta = 0.5 / factor - 0.5
    freqs = np.fft.fftfreq(m, d=1.0) * m  # signed bin indices
    ramp = np.exp(2j * np.pi * freqs * delta / n)
    fine = np.fft.ifft(padded * ramp, axis=-1) * factor
    return fine.real


_KERNELS = {
    "bilinear": _resample_axis_linear,
    "bicubic": _resample_axis_cubic,
    "sinc": _resample_axis_sinc,
}


def enhance_indicator(
    grid: CategoricalGrid, factor: int, kernel: str = "bilinear"
) -> CategoricalGrid:
    """Interpolate per-category indicators with a separable kernel, argmax."""
    if kernel not in _KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {sorted(_KERNELS)}")
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    resample = _KERNELS[kernel]
    fields = []
    for c in range(grid.k):
        ind = (grid.values2d == c).astype(np.float64)
        fine = resample(resample(ind, factor).swapaxes(0, 1), factor).swapaxes(0, 1)
        fields.append(fine)
    # argmax keeps the lowest category code on exact ties
    codes = np.argmax(np.stack(fields), axis=0)
    return CategoricalGrid(fine_geometry(grid.geometry, factor), grid.k, codes)


# ---------------------------------------------------------------------------
# Signed-distance kriging
# ---------------------------------------------------------------------------

def default_df_variogram(g: GridGeometry) -> VariogramModel:
    """Exponential, zero nugget, unit sill, range of 10 coarse cells."""
    return VariogramModel("exponential", 0.0, 1.0, 10.0 * g.cell_size_x)


def enhance_df_kriging(
    grid: CategoricalGrid,
    factor: int,
    model: VariogramModel | None = None,
    config: KrigingConfig | None = None,
) -> CategoricalGrid:
    """Krige per-category signed-distance fields to the fine cells, argmax.

    Every coarse cell center is a datum.  For binary grids a single field
    decides by sign (exact zero falls to the lower code); degenerate
    single-category grids replicate unchanged with a warning.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    g = grid.geometry
    present = np.unique(grid.values)
    if present.size < 2:
        log.warning(
            "grid holds a single category (%d); replicating instead of kriging",
            int(present[0]),
        )
        return enhance_nearest(grid, factor)
    if model is None:
        model = default_df_variogram(g)
    if config is None:
        config = KrigingConfig()
    fine = fine_geometry(g, factor)
    centers = g.cell_centers()

    def kriged_field(category: int) -> np.ndarray:
        df = signed_distance(grid, category).ravel()
        data = np.column_stack([centers, df])
        result: KrigingResult = krige_grid(data, fine, model, config)
        return result.estimate.values2d

    if grid.k == 2:
        field = kriged_field(1)
        codes = (field > 0.0).astype(np.int64)
    else:
        stack = np.stack([kriged_field(c) for c in range(grid.k)])
        codes = np.argmax(stack, axis=0)
    return CategoricalGrid(fine, grid.k, codes)


def enhance(
    grid: CategoricalGrid,
    factor: int,
    method: str,
    model: VariogramModel | None = None,
    config: KrigingConfig | None = None,
) -> CategoricalGrid:
    """Dispatch to one of: nearest, bilinear, bicubic, sinc, dfk."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "nearest":
        return enhance_nearest(grid, factor)
    if method == "dfk":
        return enhance_df_kriging(grid, factor, model, config)
    return enhance_indicator(grid, factor, kernel=method)
