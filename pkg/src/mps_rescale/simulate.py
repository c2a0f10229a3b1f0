"""Single-grid sequential pattern simulation from a training image.

A search tree is built once from the training image: every placement where
the full search template fits contributes its center category to the counts
of each prefix of its neighbor categories (template positions are ordered
nearest-first).  During simulation, cells are visited along a seeded random
path and each cell draws its category from the conditional distribution of
center categories given the informed template neighbors; when fewer than the
minimum number of replicates support the data event, the farthest informed
nodes are dropped one by one, down to the training-image marginal.

Conditioning samples are frozen into their cells before the path starts and
are reproduced exactly in every realization.  No multigrid pass and no
proportion servo are applied; the drift of realized proportions from the
training-image marginal is reported in the run log instead.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import CategoricalGrid, GridGeometry, SampleSet

__all__ = [
    "search_template",
    "PatternTree",
    "SimulationConfig",
    "build_tree",
    "simulate",
    "ensemble",
    "write_ensemble_csv",
    "THREADS_ENV",
]

log = logging.getLogger(__name__)

THREADS_ENV = "MPS_RESCALE_THREADS"

# Tree nodes are [counts, children]: counts is a length-k list of center-
# category counts for placements matching the event prefix, children maps the
# category at the next template position to the child node.
_COUNTS = 0
_CHILDREN = 1


def search_template(m: int) -> tuple[tuple[int, int], ...]:
    """The m nearest offsets to the origin, nearest-first.

    Sorted by (squared length, dy, dx); the origin itself is excluded.
    """
    if m < 1:
        raise ValueError(f"template size must be >= 1, got {m}")
    reach = int(math.isqrt(m)) + 2
    cands = [
        (dx * dx + dy * dy, dy, dx)
        for dy in range(-reach, reach + 1)
        for dx in range(-reach, reach + 1)
        if (dx, dy) != (0, 0)
    ]
    cands.sort()
    if m > len(cands):
        raise ValueError(f"template size {m} too large for search reach {reach}")
    return tuple((dx, dy) for _, dy, dx in cands[:m])


class PatternTree:
    """Prefix-count tree over a nearest-first search template.

    ``conditional_counts(event)`` returns, for a data event assigning a
    category or None to each template position, the count of each center
    category over training-image placements compatible with the event.
    Counts at any node equal the sum over its children; the root totals the
    number of scanned placements.
    """

    def __init__(
        self,
        template: tuple[tuple[int, int], ...],
        k: int,
        root: list,
        total: int,
    ):
        self.template = template
        self.k = k
        self.root = root
        self.total = total

    def __repr__(self) -> str:
        return (
            f"PatternTree(m={len(self.template)}, k={self.k}, "
            f"placements={self.total})"
        )

    def marginal_counts(self) -> np.ndarray:
        return np.asarray(self.root[_COUNTS], dtype=np.int64)

    def conditional_counts(self, event) -> np.ndarray:
        """Center-category counts given a category-or-None event sequence."""
        if len(event) != len(self.template):
            raise ValueError(
                f"event length {len(event)} does not match template size "
                f"{len(self.template)}"
            )
        informed = [
            (pos, int(c)) for pos, c in enumerate(event) if c is not None
        ]
        return np.asarray(self._query(informed), dtype=np.int64)

    def _query(self, informed: list[tuple[int, int]]) -> list[int]:
        """Counts for informed (position, category) pairs, ascending by pos."""
        if not informed:
            return self.root[_COUNTS]
        out = [0] * self.k
        last = informed[-1][0]
        # Iterative DFS; nodes beyond the last informed position never need
        # expanding because parent counts already aggregate their subtrees.
        stack = [(self.root, 0, 0)]
        while stack:
            node, depth, met = stack.pop()
            if met == len(informed):
                counts = node[_COUNTS]
                for c in range(self.k):
                    out[c] += counts[c]
                continue
            pos, cat = informed[met]
            if depth == pos:
                child = node[_CHILDREN].get(cat)
                if child is not None:
                    stack.append((child, depth + 1, met + 1))
            else:
                for child in node[_CHILDREN].values():
                    stack.append((child, depth + 1, met))
        return out


def build_tree(ti: CategoricalGrid, template: tuple[tuple[int, int], ...]) -> PatternTree:
    """Scan all full-template placements of a training image into a tree."""
    offs = [(int(dx), int(dy)) for dx, dy in template]
    if len(set(offs)) != len(offs) or (0, 0) in offs:
        raise ValueError("template offsets must be distinct and exclude (0, 0)")
    g = ti.geometry
    dxs = [o[0] for o in offs]
    dys = [o[1] for o in offs]
    x_lo, x_hi = -min(min(dxs), 0), g.nx - max(max(dxs), 0)
    y_lo, y_hi = -min(min(dys), 0), g.ny - max(max(dys), 0)
    if x_hi <= x_lo or y_hi <= y_lo:
        raise ValueError(
            f"search template does not fit in the {g.nx}x{g.ny} training image"
        )
    vals = ti.values2d
    center = vals[y_lo:y_hi, x_lo:x_hi].ravel()
    cols = [vals[y_lo + dy : y_hi + dy, x_lo + dx : x_hi + dx].ravel() for dx, dy in offs]
    events = np.stack(cols, axis=1)
    k = ti.k
    root: list = [[0] * k, {}]
    for row, c in zip(events.tolist(), center.tolist()):
        node = root
        node[_COUNTS][c] += 1
        for cat in row:
            child = node[_CHILDREN].get(cat)
            if child is None:
                child = [[0] * k, {}]
                node[_CHILDREN][cat] = child
            node = child
            node[_COUNTS][c] += 1
    return PatternTree(tuple(offs), k, root, int(center.size))


@dataclass(frozen=True)
class SimulationConfig:
    """Template size, seed and the replicate policy of the drop loop."""

    template_size: int = 12
    seed: int = 0
    min_replicates: int = 1
    max_dropped: int | None = None

    def __post_init__(self) -> None:
        if self.template_size < 1:
            raise ValueError(f"template_size must be >= 1, got {self.template_size}")
        if self.min_replicates < 1:
            raise ValueError(f"min_replicates must be >= 1, got {self.min_replicates}")
        if self.max_dropped is not None and self.max_dropped < 0:
            raise ValueError(f"max_dropped must be >= 0, got {self.max_dropped}")


def _place_conditioning(
    geometry: GridGeometry, k: int, conditioning: SampleSet | None
) -> np.ndarray:
    state = np.full((geometry.ny, geometry.nx), -1, dtype=np.int64)
    if conditioning is None:
        return state
    for x, y, cat in conditioning:
        if not 0 <= cat < k:
            raise ValueError(f"conditioning category {cat} out of range for k={k}")
        ix, iy = geometry.cell_of(x, y)
        if state[iy, ix] not in (-1, cat):
            raise ValueError(
                f"conditioning conflict in cell ({ix}, {iy}): "
                f"categories {int(state[iy, ix])} and {cat}"
            )
        state[iy, ix] = cat
    return state


def _simulate_state(
    tree: PatternTree,
    geometry: GridGeometry,
    state: np.ndarray,
    seed: int,
    config: SimulationConfig,
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    ny, nx = state.shape
    free = np.flatnonzero(state.ravel() < 0)
    path = rng.permutation(free)
    offsets = tree.template
    root_counts = tree.root[_COUNTS]
    k = tree.k
    max_drop = config.max_dropped
    for flat in path:
        iy, ix = divmod(int(flat), nx)
        informed = []
        for pos, (dx, dy) in enumerate(offsets):
            jx, jy = ix + dx, iy + dy
            if 0 <= jx < nx and 0 <= jy < ny:
                c = state[jy, jx]
                if c >= 0:
                    informed.append((pos, int(c)))
        dropped = 0
        counts = tree._query(informed)
        while sum(counts) < config.min_replicates and informed:
            if max_drop is not None and dropped >= max_drop:
                counts = root_counts
                break
            informed.pop()  # farthest informed node (highest template index)
            dropped += 1
            counts = tree._query(informed)
        total = sum(counts)
        if total == 0:
            counts, total = root_counts, tree.total
        r = rng.random() * total
        acc = 0.0
        cat = k - 1
        for c in range(k):
            acc += counts[c]
            if r < acc:
                cat = c
                break
        state[iy, ix] = cat
    return state


def simulate(
    ti: CategoricalGrid,
    geometry: GridGeometry,
    conditioning: SampleSet | None,
    config: SimulationConfig = SimulationConfig(),
) -> CategoricalGrid:
    """Draw one realization on a target geometry from a training image."""
    tree = build_tree(ti, search_template(config.template_size))
    return _finish(tree, ti.k, geometry, conditioning, config.seed, config)


def _finish(
    tree: PatternTree,
    k: int,
    geometry: GridGeometry,
    conditioning: SampleSet | None,
    seed: int,
    config: SimulationConfig,
) -> CategoricalGrid:
    state = _place_conditioning(geometry, k, conditioning)
    state = _simulate_state(tree, geometry, state, seed, config)
    out = CategoricalGrid(geometry, k, state)
    realized = np.bincount(out.values, minlength=k) / out.values.size
    ti_marg = tree.marginal_counts() / tree.total
    log.info(
        "realization seed=%d: proportions %s vs training %s (max drift %.4f)",
        seed,
        np.round(realized, 4).tolist(),
        np.round(ti_marg, 4).tolist(),
        float(np.max(np.abs(realized - ti_marg))),
    )
    return out


def _thread_budget(requested: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    if cap is not None:
        try:
            cap_val = int(cap)
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, cap)
            return requested
        if cap_val >= 1:
            return min(requested, cap_val)
    return requested


def ensemble(
    ti: CategoricalGrid,
    geometry: GridGeometry,
    conditioning: SampleSet | None,
    config: SimulationConfig,
    n_realizations: int,
    workers: int = 1,
) -> tuple[list[CategoricalGrid], np.ndarray]:
    """n realizations with seeds seed, seed+1, ... and per-cell frequencies.

    Returns the realizations and a (k, ny, nx) array of per-cell category
    frequencies.  ``workers`` is capped by the MPS_RESCALE_THREADS
    environment variable; realization i is identical regardless of worker
    count because each has its own seed.
    """
    if n_realizations < 1:
        raise ValueError(f"need at least one realization, got {n_realizations}")
    tree = build_tree(ti, search_template(config.template_size))
    seeds = [config.seed + i for i in range(n_realizations)]
    workers = max(1, _thread_budget(workers))
    if workers == 1:
        reals = [
            _finish(tree, ti.k, geometry, conditioning, s, config) for s in seeds
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reals = list(
                pool.map(
                    lambda s: _finish(tree, ti.k, geometry, conditioning, s, config),
                    seeds,
                )
            )
    freq = np.zeros((ti.k, geometry.ny, geometry.nx))
    for real in reals:
        for c in range(ti.k):
            freq[c] += real.values2d == c
    freq /= n_realizations
    return reals, freq


def write_ensemble_csv(
    freq: np.ndarray, geometry: GridGeometry, path: str | Path
) -> None:
    """Per-cell category frequencies, one row per cell in flat order."""
    k = freq.shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ix", "iy"] + [f"freq_{c}" for c in range(k)])
        for iy in range(geometry.ny):
            for ix in range(geometry.nx):
                writer.writerow(
                    [ix, iy] + [f"{freq[c, iy, ix]:.10g}" for c in range(k)]
                )
