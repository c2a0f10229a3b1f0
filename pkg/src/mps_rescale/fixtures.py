"""Deterministic synthetic test images.

These generators are the documented validation corpus for the statistics,
enhancement and simulation modules: every image is reproducible from its
arguments (and seed, where one applies).

- ``random_binary``: i.i.d. draws, the no-structure baseline.
- ``disk``: a single filled disk, one smooth low-curvature boundary.
- ``bands``: periodic straight horizontal bands, strong anisotropic structure.
- ``stripes_random``: vertical stripes of random width, a high-frequency
  image whose statistics decay quickly and irregularly with lag.
- ``channels``: overlapping sinusoidal bands tuned to a target proportion,
  a stand-in for channelized training images.
"""

from __future__ import annotations

import numpy as np

from .grid import CategoricalGrid, GridGeometry

__all__ = ["random_binary", "disk", "bands", "stripes_random", "channels"]


def random_binary(
    nx: int, ny: int, p_one: float = 0.5, seed: int = 0
) -> CategoricalGrid:
    """I.i.d. binary grid with P(category 1) = p_one."""
    if not 0.0 <= p_one <= 1.0:
        raise ValueError(f"p_one must be in [0, 1], got {p_one}")
    rng = np.random.default_rng(seed)
    vals = (rng.random((ny, nx)) < p_one).astype(np.int64)
    return CategoricalGrid(GridGeometry(nx, ny), 2, vals)


def disk(
    nx: int = 200,
    ny: int = 200,
    radius: float = 60.0,
    center: tuple[float, float] | None = None,
) -> CategoricalGrid:
    """Binary grid with a filled disk of category 1 on a 0 background."""
    if radius <= 0.0:
        raise ValueError(f"radius must be > 0, got {radius}")
    cx, cy = center if center is not None else ((nx - 1) / 2.0, (ny - 1) / 2.0)
    x = np.arange(nx)
    y = np.arange(ny)
    dist2 = (x[None, :] - cx) ** 2 + (y[:, None] - cy) ** 2
    vals = (dist2 <= radius * radius).astype(np.int64)
    return CategoricalGrid(GridGeometry(nx, ny), 2, vals)


def bands(nx: int, ny: int, period: int = 20, duty: float = 0.5) -> CategoricalGrid:
    """Periodic horizontal bands: category 1 on the first duty*period rows
    of each period."""
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    if not 0.0 < duty < 1.0:
        raise ValueError(f"duty must be in (0, 1), got {duty}")
    width = max(1, int(round(period * duty)))
    rows = ((np.arange(ny) % period) < width).astype(np.int64)
    vals = np.repeat(rows[:, None], nx, axis=1)
    return CategoricalGrid(GridGeometry(nx, ny), 2, vals)


def stripes_random(
    nx: int, ny: int, seed: int = 0, min_width: int = 1, max_width: int = 3
) -> CategoricalGrid:
    """Vertical stripes of alternating category and random width."""
    if not 1 <= min_width <= max_width:
        raise ValueError(
            f"need 1 <= min_width <= max_width, got ({min_width}, {max_width})"
        )
    rng = np.random.default_rng(seed)
    cols = np.empty(nx, dtype=np.int64)
    x = 0
    cat = 0
    while x < nx:
        w = int(rng.integers(min_width, max_width + 1))
        cols[x : x + w] = cat
        x += w
        cat = 1 - cat
    vals = np.repeat(cols[None, :], ny, axis=0)
    return CategoricalGrid(GridGeometry(nx, ny), 2, vals)


def channels(
    nx: int = 250,
    ny: int = 250,
    target: float = 0.3,
    seed: int = 0,
    tolerance: float = 0.02,
    thickness: tuple[float, float] = (0.025, 0.05),
    amplitude: tuple[float, float] = (0.02, 0.06),
) -> CategoricalGrid:
    """Sinusoidal sub-horizontal channel bands covering ~target proportion.

    Bands of category 1 with random amplitude, wavelength, phase and
    thickness are added until the covered proportion reaches the target; the
    last band's thickness is then trimmed so the final proportion lands
    within the tolerance.  Band thickness and sinusoid amplitude are drawn
    uniformly from the ``thickness`` and ``amplitude`` intervals, both
    expressed as fractions of ``ny``.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target proportion must be in (0, 1), got {target}")
    if not 0.0 < thickness[0] <= thickness[1]:
        raise ValueError(f"need 0 < thickness[0] <= thickness[1], got {thickness}")
    if not 0.0 <= amplitude[0] <= amplitude[1]:
        raise ValueError(f"need 0 <= amplitude[0] <= amplitude[1], got {amplitude}")
    rng = np.random.default_rng(seed)
    x = np.arange(nx)
    y = np.arange(ny)[:, None]
    vals = np.zeros((ny, nx), dtype=bool)
    half = tolerance / 2.0
    for _ in range(1000):
        if vals.mean() >= target - half:
            break
        y0 = rng.uniform(0, ny)
        amp = rng.uniform(amplitude[0] * ny, amplitude[1] * ny)
        wav = rng.uniform(0.6 * nx, 1.5 * nx)
        phase = rng.uniform(0, 2 * np.pi)
        thick = rng.uniform(thickness[0] * ny, thickness[1] * ny)
        centerline = (y0 + amp * np.sin(2 * np.pi * x / wav + phase))[None, :]

        def covered(t: float) -> np.ndarray:
            return vals | (np.abs(y - centerline) <= t / 2.0)

        if covered(thick).mean() > target + half:
            lo, hi = 0.0, thick
            for _ in range(30):
                mid = 0.5 * (lo + hi)
                if covered(mid).mean() > target + half:
                    hi = mid
                else:
                    lo = mid
            thick = lo
        vals = covered(thick)
    prop = vals.mean()
    if abs(prop - target) > tolerance:
        raise RuntimeError(
            f"channel construction landed at {prop:.4f}, "
            f"outside {target} +- {tolerance}"
        )
    return CategoricalGrid(GridGeometry(nx, ny), 2, vals.astype(np.int64))
