"""Regular 2-D grid data model and ASCII I/O.

Grids are cell-centered and row-major: cell (ix, iy) has its center at
``(origin_x + ix*cell_size_x, origin_y + iy*cell_size_y)`` and lives at flat
index ``iy*nx + ix`` (x cycles fastest, y increases upward, so flat index 0 is
the lower-left cell).  Values are stored once, validated, and frozen; every
operation returns a new object.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "GridFormatError",
    "GridGeometry",
    "CategoricalGrid",
    "ContinuousField",
    "SampleSet",
    "load_grid",
    "save_grid",
    "load_field",
    "save_field",
    "load_samples",
    "save_samples",
    "proportions",
    "decimate",
    "sample_random",
    "sample_regular",
]


class GridFormatError(ValueError):
    """Raised when an input file cannot be parsed as a grid."""


@dataclass(frozen=True)
class GridGeometry:
    """Shape and placement of a regular grid.

    Parameters
    ----------
    nx, ny : int
        Number of cells along x and y (both >= 1).
    cell_size_x, cell_size_y : float
        Cell extent in length units (both > 0).
    origin_x, origin_y : float
        Coordinates of the center of cell (0, 0), the lower-left cell.
    """

    nx: int
    ny: int
    cell_size_x: float = 1.0
    cell_size_y: float = 1.0
    origin_x: float = 0.0
    origin_y: float = 0.0

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.nx}x{self.ny}")
        if not (self.cell_size_x > 0.0 and self.cell_size_y > 0.0):
            raise ValueError(
                f"cell sizes must be > 0, got ({self.cell_size_x}, {self.cell_size_y})"
            )

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def x_coords(self) -> np.ndarray:
        """Cell-center x coordinates, length nx."""
        return self.origin_x + self.cell_size_x * np.arange(self.nx)

    def y_coords(self) -> np.ndarray:
        """Cell-center y coordinates, length ny."""
        return self.origin_y + self.cell_size_y * np.arange(self.ny)

    def cell_centers(self) -> np.ndarray:
        """All cell centers as an (nx*ny, 2) array in flat-index order."""
        xs, ys = np.meshgrid(self.x_coords(), self.y_coords())
        return np.column_stack([xs.ravel(), ys.ravel()])

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Indices (ix, iy) of the cell whose box contains the point.

        Raises ValueError for points outside the grid bounding box.
        """
        ix = math.floor((x - self.origin_x) / self.cell_size_x + 0.5)
        iy = math.floor((y - self.origin_y) / self.cell_size_y + 0.5)
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise ValueError(f"point ({x}, {y}) lies outside the grid")
        return ix, iy


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(values)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CategoricalGrid:
    """An exhaustive grid of integer category codes in [0, k).

    ``values`` is the flat row-major array (length nx*ny, x fastest); use
    ``values2d`` for the (ny, nx) view indexed as [iy, ix].
    """

    geometry: GridGeometry
    k: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        vals = np.asarray(self.values)
        if vals.ndim == 2:
            if vals.shape != (self.geometry.ny, self.geometry.nx):
                raise ValueError(
                    f"2-D values shape {vals.shape} does not match geometry "
                    f"({self.geometry.ny}, {self.geometry.nx})"
                )
            vals = vals.ravel()
        if vals.shape != (self.geometry.size,):
            raise ValueError(
                f"expected {self.geometry.size} values, got {vals.shape}"
            )
        if not np.issubdtype(vals.dtype, np.integer):
            ivals = vals.astype(np.int64)
            if not np.array_equal(ivals, vals):
                raise ValueError("category values must be integers")
            vals = ivals
        else:
            vals = vals.astype(np.int64, copy=True)
        if vals.size and (vals.min() < 0 or vals.max() >= self.k):
            raise ValueError(
                f"category out of range: values must lie in [0, {self.k}), "
                f"found [{vals.min()}, {vals.max()}]"
            )
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def values2d(self) -> np.ndarray:
        return self.values.reshape(self.geometry.ny, self.geometry.nx)


@dataclass(frozen=True)
class ContinuousField:
    """A real-valued field on a grid geometry, flat row-major like the grids."""

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim == 2:
            if vals.shape != (self.geometry.ny, self.geometry.nx):
                raise ValueError(
                    f"2-D values shape {vals.shape} does not match geometry "
                    f"({self.geometry.ny}, {self.geometry.nx})"
                )
            vals = vals.ravel()
        if vals.shape != (self.geometry.size,):
            raise ValueError(
                f"expected {self.geometry.size} values, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _freeze(vals.copy()))

    @property
    def values2d(self) -> np.ndarray:
        return self.values.reshape(self.geometry.ny, self.geometry.nx)


@dataclass(frozen=True)
class SampleSet:
    """Point data: parallel arrays of x, y and integer category."""

    x: np.ndarray
    y: np.ndarray
    category: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        c = np.asarray(self.category, dtype=np.int64)
        if not (x.shape == y.shape == c.shape) or x.ndim != 1:
            raise ValueError("x, y and category must be 1-D arrays of equal length")
        if c.size and c.min() < 0:
            raise ValueError("sample categories must be non-negative")
        object.__setattr__(self, "x", _freeze(x.copy()))
        object.__setattr__(self, "y", _freeze(y.copy()))
        object.__setattr__(self, "category", _freeze(c.copy()))

    def __len__(self) -> int:
        return self.x.size

    def __iter__(self):
        return zip(self.x.tolist(), self.y.tolist(), self.category.tolist())

    def validate_against(self, grid: CategoricalGrid) -> None:
        """Check coordinates fall in the grid box and categories are < k."""
        g = grid.geometry
        half_x, half_y = 0.5 * g.cell_size_x, 0.5 * g.cell_size_y
        lo_x, hi_x = g.origin_x - half_x, g.origin_x + (g.nx - 0.5) * g.cell_size_x
        lo_y, hi_y = g.origin_y - half_y, g.origin_y + (g.ny - 0.5) * g.cell_size_y
        if len(self) and (
            self.x.min() < lo_x
            or self.x.max() > hi_x
            or self.y.min() < lo_y
            or self.y.max() > hi_y
        ):
            raise ValueError("sample coordinates fall outside the grid bounding box")
        if len(self) and self.category.max() >= grid.k:
            raise ValueError(
                f"sample category out of range for k={grid.k}: "
                f"max is {self.category.max()}"
            )


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _parse_gslib(lines: list[str], k: int) -> CategoricalGrid:
    if len(lines) < 3:
        raise GridFormatError("too few lines for a GSLIB grid file")
    header = lines[1].split()
    if len(header) not in (3, 5, 7):
        raise GridFormatError(
            f"header line must have 3, 5 or 7 tokens, got {len(header)}"
        )
    try:
        nvar, nx, ny = int(header[0]), int(header[1]), int(header[2])
        extras = [float(t) for t in header[3:]]
    except ValueError as exc:
        raise GridFormatError(f"bad header line: {lines[1]!r}") from exc
    if nvar < 1 or nx < 1 or ny < 1:
        raise GridFormatError(f"bad header counts: {lines[1]!r}")
    csx = extras[0] if len(extras) > 0 else 1.0
    csy = extras[1] if len(extras) > 1 else 1.0
    ox = extras[2] if len(extras) > 2 else 0.0
    oy = extras[3] if len(extras) > 3 else 0.0
    body = lines[2 + nvar :]
    if len(lines) < 2 + nvar or len(body) != nx * ny:
        raise GridFormatError(
            f"expected {nx * ny} value lines after {nvar} variable names, "
            f"got {len(body)}"
        )
    try:
        # One value per line, x cycling fastest from the lower-left cell.
        vals = np.array([int(float(line.split()[0])) for line in body], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise GridFormatError("non-numeric value line in grid body") from exc
    geometry = GridGeometry(nx, ny, csx, csy, ox, oy)
    return CategoricalGrid(geometry, k, vals)


def _parse_matrix(lines: list[str], k: int) -> CategoricalGrid:
    rows = []
    for line in lines:
        toks = line.split()
        if not toks:
            continue
        try:
            rows.append([int(t) for t in toks])
        except ValueError as exc:
            raise GridFormatError(f"non-integer token in matrix row: {line!r}") from exc
    if not rows:
        raise GridFormatError("empty matrix file")
    nx = len(rows[0])
    if any(len(r) != nx for r in rows):
        raise GridFormatError("matrix rows have unequal lengths")
    # File rows are written top-to-bottom, so the first row is y = ny-1.
    arr = np.array(rows[::-1], dtype=np.int64)
    return CategoricalGrid(GridGeometry(nx, arr.shape[0]), k, arr)


def load_grid(path: str | Path, k: int, fmt: str = "auto") -> CategoricalGrid:
    """Read a categorical grid from an ASCII file.

    ``fmt`` is "gslib" (title line; header "nvar nx ny [csx csy ox oy]"; nvar
    variable-name lines; one value per line, x fastest), "matrix" (ny rows of
    nx integers, first row on top) or "auto", which tries the GSLIB header and
    falls back to matrix parsing.
    """
    if not str(path):
        raise ValueError("empty path")
    text = Path(path).read_text()
    lines = [ln.rstrip("\n") for ln in text.splitlines()]
    if fmt == "gslib":
        return _parse_gslib(lines, k)
    if fmt == "matrix":
        return _parse_matrix(lines, k)
    if fmt != "auto":
        raise ValueError(f"unknown grid format {fmt!r}")
    try:
        return _parse_gslib(lines, k)
    except GridFormatError:
        return _parse_matrix(lines, k)


def save_grid(grid: CategoricalGrid, path: str | Path, title: str = "grid") -> None:
    """Write a grid in the extended GSLIB format used by :func:`load_grid`.

    Geometry floats are written with full precision so that a save/load
    round trip reproduces the grid exactly.
    """
    if not str(path):
        raise ValueError("empty path")
    g = grid.geometry
    header = (
        f"1 {g.nx} {g.ny} {g.cell_size_x!r} {g.cell_size_y!r} "
        f"{g.origin_x!r} {g.origin_y!r}"
    )
    with open(path, "w") as fh:
        fh.write(f"{title}\n{header}\ncategory\n")
        fh.write("\n".join(str(v) for v in grid.values.tolist()))
        fh.write("\n")


def save_field(field: ContinuousField, path: str | Path, title: str = "field") -> None:
    """Write a continuous field in the same extended GSLIB layout as grids."""
    if not str(path):
        raise ValueError("empty path")
    g = field.geometry
    header = (
        f"1 {g.nx} {g.ny} {g.cell_size_x!r} {g.cell_size_y!r} "
        f"{g.origin_x!r} {g.origin_y!r}"
    )
    with open(path, "w") as fh:
        fh.write(f"{title}\n{header}\nvalue\n")
        fh.write("\n".join(repr(v) for v in field.values.tolist()))
        fh.write("\n")


def load_field(path: str | Path) -> ContinuousField:
    """Read a continuous field written by :func:`save_field`."""
    if not str(path):
        raise ValueError("empty path")
    lines = [ln.rstrip("\n") for ln in Path(path).read_text().splitlines()]
    if len(lines) < 3:
        raise GridFormatError("too few lines for a GSLIB field file")
    header = lines[1].split()
    if len(header) not in (3, 5, 7):
        raise GridFormatError(
            f"header line must have 3, 5 or 7 tokens, got {len(header)}"
        )
    try:
        nvar, nx, ny = int(header[0]), int(header[1]), int(header[2])
        extras = [float(t) for t in header[3:]]
    except ValueError as exc:
        raise GridFormatError(f"bad header line: {lines[1]!r}") from exc
    if nvar < 1 or nx < 1 or ny < 1:
        raise GridFormatError(f"bad header counts: {lines[1]!r}")
    csx = extras[0] if len(extras) > 0 else 1.0
    csy = extras[1] if len(extras) > 1 else 1.0
    ox = extras[2] if len(extras) > 2 else 0.0
    oy = extras[3] if len(extras) > 3 else 0.0
    body = lines[2 + nvar :]
    if len(body) != nx * ny:
        raise GridFormatError(f"expected {nx * ny} value lines, got {len(body)}")
    try:
        vals = np.array([float(line.split()[0]) for line in body])
    except (ValueError, IndexError) as exc:
        raise GridFormatError("non-numeric value line in field body") from exc
    return ContinuousField(GridGeometry(nx, ny, csx, csy, ox, oy), vals)


def load_samples(path: str | Path) -> SampleSet:
    """Read point samples from a CSV file with header ``x,y,category``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y", "category"]:
            raise GridFormatError(
                f"sample file must start with header 'x,y,category', got {header}"
            )
        xs, ys, cats = [], [], []
        for row in reader:
            if not row:
                continue
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
                cats.append(int(row[2]))
            except (ValueError, IndexError) as exc:
                raise GridFormatError(f"bad sample row: {row}") from exc
    return SampleSet(np.array(xs), np.array(ys), np.array(cats, dtype=np.int64))


def save_samples(samples: SampleSet, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "category"])
        for x, y, c in samples:
            writer.writerow([repr(x), repr(y), c])


# ---------------------------------------------------------------------------
# Grid operations
# ---------------------------------------------------------------------------

def proportions(grid: CategoricalGrid) -> np.ndarray:
    """Category proportions over all cells, length k, summing to 1."""
    counts = np.bincount(grid.values, minlength=grid.k)
    return counts / grid.geometry.size


def decimate(grid: CategoricalGrid, step_x: int, step_y: int) -> CategoricalGrid:
    """Keep every step-th cell in each direction, anchored at cell (0, 0).

    Output dims are ceil(n/step); cell sizes are multiplied by the steps.  The
    output origin shifts by cell_size*(step-1)/2 per axis so each coarse cell
    is the bounding box of the step x step fine cells it replaces (the kept
    sample sits at the lower-left corner of that box).
    """
    if step_x <= 0 or step_y <= 0:
        raise ValueError(f"steps must be >= 1, got ({step_x}, {step_y})")
    g = grid.geometry
    if step_x > g.nx or step_y > g.ny:
        raise ValueError(
            f"steps ({step_x}, {step_y}) exceed grid dimensions ({g.nx}, {g.ny})"
        )
    vals = grid.values2d[::step_y, ::step_x]
    geometry = GridGeometry(
        nx=vals.shape[1],
        ny=vals.shape[0],
        cell_size_x=g.cell_size_x * step_x,
        cell_size_y=g.cell_size_y * step_y,
        origin_x=g.origin_x + g.cell_size_x * (step_x - 1) / 2.0,
        origin_y=g.origin_y + g.cell_size_y * (step_y - 1) / 2.0,
    )
    return CategoricalGrid(geometry, grid.k, vals)


def sample_random(grid: CategoricalGrid, n: int, seed: int) -> SampleSet:
    """Draw n distinct cells uniformly at random; reproducible for a seed."""
    size = grid.geometry.size
    if not (1 <= n <= size):
        raise ValueError(f"n must be in [1, {size}], got {n}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(size, size=n, replace=False))
    g = grid.geometry
    x = g.origin_x + (idx % g.nx) * g.cell_size_x
    y = g.origin_y + (idx // g.nx) * g.cell_size_y
    return SampleSet(x, y, grid.values[idx])


def sample_regular(grid: CategoricalGrid, n_target: int) -> SampleSet:
    """Extract a centered near-uniform lattice of floor(sqrt(n))^2 samples."""
    if n_target < 1:
        raise ValueError(f"n_target must be >= 1, got {n_target}")
    m = math.isqrt(n_target)
    g = grid.geometry
    ix = np.floor((np.arange(m) + 0.5) * g.nx / m).astype(np.int64)
    iy = np.floor((np.arange(m) + 0.5) * g.ny / m).astype(np.int64)
    ix = np.clip(ix, 0, g.nx - 1)
    iy = np.clip(iy, 0, g.ny - 1)
    gx, gy = np.meshgrid(ix, iy)
    idx = gy.ravel() * g.nx + gx.ravel()
    x = g.origin_x + (idx % g.nx) * g.cell_size_x
    y = g.origin_y + (idx // g.nx) * g.cell_size_y
    return SampleSet(x, y, grid.values[idx])
