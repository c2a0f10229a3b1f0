"""Ordinary kriging of scattered point data onto grid geometries.

Covariances follow the practical-range convention: C(h) = sill - gamma(h)
with gamma(0) = 0 (so C(0) = sill exactly) and, for h > 0,

    gamma(h) = nugget + (sill - nugget) * g(h/a)

where g is the unit spherical, exponential (1 - exp(-3h/a)) or Gaussian
(1 - exp(-3(h/a)^2)) structure, a the practical range.  The neighborhood of a
target collects all data within the search radius, keeps the nearest
``max_neighbors`` of them (ties broken by data index) and solves the dense
ordinary-kriging system with the unbiasedness constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .grid import ContinuousField, GridGeometry

__all__ = [
    "VariogramModel",
    "KrigingConfig",
    "KrigingResult",
    "variogram",
    "covariance",
    "parse_variogram",
    "ok_weights",
    "krige_point",
    "krige_grid",
]

_STRUCTURES = ("spherical", "exponential", "gaussian")
DUPLICATE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VariogramModel:
    """A single-structure variogram with optional geometric anisotropy.

    ``azimuth`` is the major-axis direction in degrees clockwise from grid
    north (+y); ``ratio`` is the minor/major range ratio in (0, 1].  Without
    anisotropy the model is isotropic in the plain Euclidean lag.
    """

    kind: str = "exponential"
    nugget: float = 0.0
    sill: float = 1.0
    range_: float = 10.0
    azimuth: float | None = None
    ratio: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _STRUCTURES:
            raise ValueError(
                f"unknown variogram type {self.kind!r}; choose from {_STRUCTURES}"
            )
        if self.nugget < 0.0:
            raise ValueError(f"nugget must be >= 0, got {self.nugget}")
        if self.sill <= 0.0:
            raise ValueError(f"sill must be > 0, got {self.sill}")
        if self.nugget > self.sill:
            raise ValueError(
                f"nugget {self.nugget} exceeds sill {self.sill}"
            )
        if self.range_ <= 0.0:
            raise ValueError(f"range must be > 0, got {self.range_}")
        if (self.azimuth is None) != (self.ratio is None):
            raise ValueError("azimuth and ratio must be given together")
        if self.ratio is not None and not 0.0 < self.ratio <= 1.0:
            raise ValueError(f"anisotropy ratio must be in (0, 1], got {self.ratio}")


def parse_variogram(text: str) -> VariogramModel:
    """Parse "type,nugget,sill,range[,azimuth,ratio]"."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (4, 6):
        raise ValueError(
            f"variogram spec needs 4 or 6 comma-separated fields, got {text!r}"
        )
    kind = parts[0]
    try:
        nums = [float(p) for p in parts[1:]]
    except ValueError as exc:
        raise ValueError(f"non-numeric field in variogram spec {text!r}") from exc
    if len(nums) == 3:
        return VariogramModel(kind, nums[0], nums[1], nums[2])
    return VariogramModel(kind, nums[0], nums[1], nums[2], nums[3], nums[4])


def _unit_structure(kind: str, h_over_a: np.ndarray) -> np.ndarray:
    if kind == "spherical":
        t = np.minimum(h_over_a, 1.0)
        return 1.5 * t - 0.5 * t**3
    if kind == "exponential":
        return 1.0 - np.exp(-3.0 * h_over_a)
    return 1.0 - np.exp(-3.0 * h_over_a**2)


def variogram(model: VariogramModel, h) -> np.ndarray:
    """gamma(h) for scalar or array lags; gamma(0) = 0."""
    h = np.asarray(h, dtype=np.float64)
    g = model.nugget + (model.sill - model.nugget) * _unit_structure(
        model.kind, h / model.range_
    )
    return np.where(h == 0.0, 0.0, g)


def covariance(model: VariogramModel, h) -> np.ndarray:
    """C(h) = sill - gamma(h); C(0) = sill."""
    return model.sill - variogram(model, h)


def effective_distance(model: VariogramModel, dx, dy) -> np.ndarray:
    """Anisotropy-corrected lag length for coordinate deltas."""
    dx = np.asarray(dx, dtype=np.float64)
    dy = np.asarray(dy, dtype=np.float64)
    if model.azimuth is None:
        return np.hypot(dx, dy)
    az = math.radians(model.azimuth)
    d_major = dx * math.sin(az) + dy * math.cos(az)
    d_minor = dx * math.cos(az) - dy * math.sin(az)
    return np.hypot(d_major, d_minor / model.ratio)


@dataclass(frozen=True)
class KrigingConfig:
    """Neighborhood policy: radius search, nearest cap, minimum to solve."""

    max_neighbors: int = 16
    min_neighbors: int = 1
    search_radius: float = math.inf

    def __post_init__(self) -> None:
        if self.min_neighbors < 1:
            raise ValueError(f"min_neighbors must be >= 1, got {self.min_neighbors}")
        if self.max_neighbors < self.min_neighbors:
            raise ValueError(
                f"max_neighbors {self.max_neighbors} below min_neighbors "
                f"{self.min_neighbors}"
            )
        if not self.search_radius > 0.0:
            raise ValueError(f"search radius must be > 0, got {self.search_radius}")


def _as_data(data) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"data must be an (n, 3) array of x, y, value, got {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError("at least one datum is required")
    if not np.all(np.isfinite(arr)):
        raise ValueError("data must be finite")
    return np.ascontiguousarray(arr[:, :2]), np.ascontiguousarray(arr[:, 2])


def _reject_duplicates(coords: np.ndarray) -> None:
    if coords.shape[0] < 2:
        return
    pairs = cKDTree(coords).query_pairs(DUPLICATE_TOLERANCE)
    if pairs:
        i, j = sorted(pairs)[0]
        raise ValueError(
            f"duplicate data locations: points {i} and {j} are closer than "
            f"{DUPLICATE_TOLERANCE}"
        )


def _neighbor_order(coords: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Data indices sorted by distance to the target, ties by index."""
    d = np.hypot(coords[:, 0] - target[0], coords[:, 1] - target[1])
    return np.argsort(d, kind="stable"), d


def ok_weights(
    data,
    target,
    model: VariogramModel,
    config: KrigingConfig = KrigingConfig(),
) -> tuple[np.ndarray, np.ndarray, float]:
    """Neighbor indices, ordinary-kriging weights and Lagrange multiplier.

    The weights always sum to 1 (unbiasedness row of the dense system).
    """
    coords, _ = _as_data(data)
    _reject_duplicates(coords)
    t = np.asarray(target, dtype=np.float64)
    order, d = _neighbor_order(coords, t)
    within = order[d[order] <= config.search_radius]
    neigh = within[: config.max_neighbors]
    if neigh.size < config.min_neighbors:
        raise ValueError(
            f"insufficient neighbors: {neigh.size} within radius "
            f"{config.search_radius}, need {config.min_neighbors}"
        )
    w, mu = _solve_ok_single(coords[neigh], t, model)
    return neigh, w, mu


def _solve_ok_single(
    ncoords: np.ndarray, target: np.ndarray, model: VariogramModel
) -> tuple[np.ndarray, float]:
    m = ncoords.shape[0]
    dx = ncoords[:, 0, None] - ncoords[None, :, 0]
    dy = ncoords[:, 1, None] - ncoords[None, :, 1]
    a = np.empty((m + 1, m + 1))
    a[:m, :m] = covariance(model, effective_distance(model, dx, dy))
    a[m, :m] = 1.0
    a[:m, m] = 1.0
    a[m, m] = 0.0
    b = np.empty(m + 1)
    b[:m] = covariance(
        model,
        effective_distance(model, ncoords[:, 0] - target[0], ncoords[:, 1] - target[1]),
    )
    b[m] = 1.0
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular kriging system at target {target}") from exc
    return sol[:m], float(sol[m])


def krige_point(
    data,
    target,
    model: VariogramModel,
    config: KrigingConfig = KrigingConfig(),
) -> tuple[float, float]:
    """Ordinary-kriging estimate and variance at one target location."""
    coords, values = _as_data(data)
    _reject_duplicates(coords)
    t = np.asarray(target, dtype=np.float64)
    order, d = _neighbor_order(coords, t)
    within = order[d[order] <= config.search_radius]
    neigh = within[: config.max_neighbors]
    if neigh.size < config.min_neighbors:
        raise ValueError(
            f"insufficient neighbors: {neigh.size} within radius "
            f"{config.search_radius}, need {config.min_neighbors}"
        )
    nc = coords[neigh]
    w, mu = _solve_ok_single(nc, t, model)
    cov_t = covariance(
        model, effective_distance(model, nc[:, 0] - t[0], nc[:, 1] - t[1])
    )
    est = float(w @ values[neigh])
    var = float(model.sill - w @ cov_t - mu)
    return est, var


@dataclass(frozen=True)
class KrigingResult:
    """Gridded estimates with variance and a mask of nearest-fill cells."""

    estimate: ContinuousField
    variance: ContinuousField
    filled: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.filled, dtype=bool)
        object.__setattr__(self, "filled", f)


_CHUNK = 2048


def krige_grid(
    data,
    geometry: GridGeometry,
    model: VariogramModel,
    config: KrigingConfig = KrigingConfig(),
) -> KrigingResult:
    """Krige every cell center of a geometry.

    Cells that cannot gather ``min_neighbors`` within the search radius are
    filled with the nearest datum value (variance = sill) and flagged in the
    ``filled`` mask instead of failing the whole grid.
    """
    coords, values = _as_data(data)
    _reject_duplicates(coords)
    targets = geometry.cell_centers()
    n_t = targets.shape[0]
    est = np.empty(n_t)
    var = np.empty(n_t)
    filled = np.zeros(n_t, dtype=bool)
    m_cap = min(config.max_neighbors, coords.shape[0])
    for start in range(0, n_t, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n_t))
        t = targets[sl]
        d = np.hypot(
            t[:, 0, None] - coords[None, :, 0], t[:, 1, None] - coords[None, :, 1]
        )
        order = np.argsort(d, kind="stable", axis=1)[:, :m_cap]
        nd = np.take_along_axis(d, order, axis=1)
        n_ok = (nd <= config.search_radius).sum(axis=1)
        short = n_ok < config.min_neighbors
        if np.any(short):
            # est[sl] is a view, so fancy assignment through it writes back
            nearest = order[short, 0]
            est[sl][short] = values[nearest]
            var[sl][short] = model.sill
            filled[sl][short] = True
        for m in np.unique(n_ok[~short]) if np.any(~short) else []:
            rows = np.flatnonzero(~short & (n_ok == m))
            idx = order[rows, :m]
            nc = coords[idx]
            dx = nc[:, :, 0, None] - nc[:, None, :, 0]
            dy = nc[:, :, 1, None] - nc[:, None, :, 1]
            a = np.empty((rows.size, m + 1, m + 1))
            a[:, :m, :m] = covariance(model, effective_distance(model, dx, dy))
            a[:, m, :m] = 1.0
            a[:, :m, m] = 1.0
            a[:, m, m] = 0.0
            b = np.empty((rows.size, m + 1))
            cov_t = covariance(
                model,
                effective_distance(
                    model,
                    nc[:, :, 0] - t[rows, None, 0],
                    nc[:, :, 1] - t[rows, None, 1],
                ),
            )
            b[:, :m] = cov_t
            b[:, m] = 1.0
            try:
                # trailing axis so each right-hand side is a column vector
                sol = np.linalg.solve(a, b[:, :, None])[:, :, 0]
            except np.linalg.LinAlgError as exc:
                raise ValueError("singular kriging system in grid solve") from exc
            w = sol[:, :m]
            mu = sol[:, m]
            e_rows = np.einsum("ij,ij->i", w, values[idx])
            v_rows = model.sill - np.einsum("ij,ij->i", w, cov_t) - mu
            est[start + rows] = e_rows
            var[start + rows] = v_rows
    return KrigingResult(
        ContinuousField(geometry, est),
        ContinuousField(geometry, var),
        filled.reshape(geometry.ny, geometry.nx),
    )
