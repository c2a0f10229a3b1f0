"""Block upscaling of categorical grids and mixed-material curves.

A block spec partitions a grid into bx x by cell blocks anchored at cell
(0, 0); blocks at the high edges may be truncated and are processed with
their actual cell count.  Upscaled geometry multiplies the cell sizes by the
block dims and shifts the origin by cell_size*(b-1)/2 per axis so each output
cell is the bounding box of the fine cells it aggregates (nominal size for
truncated edge blocks).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import CategoricalGrid, ContinuousField, GridGeometry

__all__ = [
    "BlockSpec",
    "upscale_majority",
    "upscale_proportion",
    "threshold",
    "mixed_fraction",
    "mixed_curve",
    "default_cutoffs",
    "write_mixed_curves_csv",
]


@dataclass(frozen=True)
class BlockSpec:
    bx: int
    by: int

    def __post_init__(self) -> None:
        if self.bx < 1 or self.by < 1:
            raise ValueError(f"block dims must be >= 1, got ({self.bx}, {self.by})")


def _block_geometry(g: GridGeometry, block: BlockSpec) -> GridGeometry:
    return GridGeometry(
        nx=-(-g.nx // block.bx),
        ny=-(-g.ny // block.by),
        cell_size_x=g.cell_size_x * block.bx,
        cell_size_y=g.cell_size_y * block.by,
        origin_x=g.origin_x + g.cell_size_x * (block.bx - 1) / 2.0,
        origin_y=g.origin_y + g.cell_size_y * (block.by - 1) / 2.0,
    )


def _block_sum(arr: np.ndarray, block: BlockSpec) -> np.ndarray:
    """Sum a (ny, nx) array over bx x by blocks, truncated at the edges."""
    ex = np.arange(0, arr.shape[1], block.bx)
    ey = np.arange(0, arr.shape[0], block.by)
    return np.add.reduceat(np.add.reduceat(arr, ey, axis=0), ex, axis=1)


def _block_cell_counts(grid: CategoricalGrid, block: BlockSpec) -> np.ndarray:
    ones = np.ones(grid.values2d.shape, dtype=np.int64)
    return _block_sum(ones, block)


def upscale_majority(grid: CategoricalGrid, block: BlockSpec) -> CategoricalGrid:
    """Modal category per block; ties resolved to the lowest category code."""
    _check_block(grid.geometry, block)
    counts = np.stack(
        [
            _block_sum((grid.values2d == c).astype(np.int64), block)
            for c in range(grid.k)
        ]
    )
    # argmax returns the first (lowest-code) maximum on ties
    majority = np.argmax(counts, axis=0)
    return CategoricalGrid(_block_geometry(grid.geometry, block), grid.k, majority)


def upscale_proportion(
    grid: CategoricalGrid, block: BlockSpec, category: int
) -> ContinuousField:
    """Fraction of each block occupied by the target category, in [0, 1]."""
    _check_block(grid.geometry, block)
    if not 0 <= category < grid.k:
        raise ValueError(f"category {category} out of range for k={grid.k}")
    hits = _block_sum((grid.values2d == category).astype(np.int64), block)
    cells = _block_cell_counts(grid, block)
    return ContinuousField(_block_geometry(grid.geometry, block), hits / cells)


def _check_block(g: GridGeometry, block: BlockSpec) -> None:
    if block.bx > g.nx or block.by > g.ny:
        raise ValueError(
            f"block ({block.bx}, {block.by}) exceeds grid ({g.nx}, {g.ny})"
        )


def threshold(field: ContinuousField, cutoff: float) -> CategoricalGrid:
    """Binary grid: 1 where the field value is >= cutoff, else 0.

    Field values must already lie in [0, 1] (proportions), as must the cutoff.
    """
    if not 0.0 <= cutoff <= 1.0:
        raise ValueError(f"cutoff must be in [0, 1], got {cutoff}")
    v = field.values
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueError(
            f"field values must lie in [0, 1], found [{v.min()}, {v.max()}]"
        )
    return CategoricalGrid(field.geometry, 2, (v >= cutoff).astype(np.int64))


def mixed_fraction(field: ContinuousField, cutoff: float) -> float:
    """Fraction of blocks assigned to the target at this cutoff that still
    contain other material: proportion p with p >= cutoff and 0 < p < 1."""
    if not 0.0 <= cutoff <= 1.0:
        raise ValueError(f"cutoff must be in [0, 1], got {cutoff}")
    p = field.values
    if p.min() < 0.0 or p.max() > 1.0:
        raise ValueError(
            f"field values must lie in [0, 1], found [{p.min()}, {p.max()}]"
        )
    mixed = (p >= cutoff) & (p > 0.0) & (p < 1.0)
    return float(np.count_nonzero(mixed) / p.size)


def default_cutoffs() -> np.ndarray:
    """The standard cutoff sweep 0, 0.05, ..., 1."""
    return np.linspace(0.0, 1.0, 21)


def mixed_curve(
    field: ContinuousField, cutoffs: Sequence[float] | None = None
) -> list[tuple[float, float]]:
    """Mixed-material fraction at each cutoff; non-increasing in the cutoff."""
    cuts = default_cutoffs() if cutoffs is None else np.asarray(cutoffs, float)
    return [(float(c), mixed_fraction(field, float(c))) for c in cuts]


def write_mixed_curves_csv(
    curves: Sequence[Sequence[tuple[float, float]]],
    path: str | Path,
    labels: Sequence[str] | None = None,
) -> None:
    """Per-realization mixed curves plus mean and quartile summary rows.

    All curves must share the same cutoff list.  The ``series`` column holds
    the realization label or one of mean/q25/median/q75.
    """
    if not curves:
        raise ValueError("no curves to write")
    cuts = [c for c, _ in curves[0]]
    for crv in curves:
        if [c for c, _ in crv] != cuts:
            raise ValueError("curves have mismatched cutoff lists")
    if labels is None:
        labels = [f"r{i:03d}" for i in range(len(curves))]
    fracs = np.array([[f for _, f in crv] for crv in curves])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "cutoff", "mixed_fraction"])
        for label, crv in zip(labels, curves):
            for c, f in crv:
                writer.writerow([label, f"{c:.10g}", f"{f:.10g}"])
        for name, row in [
            ("mean", fracs.mean(axis=0)),
            ("q25", np.percentile(fracs, 25, axis=0)),
            ("median", np.percentile(fracs, 50, axis=0)),
            ("q75", np.percentile(fracs, 75, axis=0)),
        ]:
            for c, f in zip(cuts, row):
                writer.writerow([name, f"{c:.10g}", f"{f:.10g}"])
