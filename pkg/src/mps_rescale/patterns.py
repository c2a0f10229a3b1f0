"""Lag-indexed multi-point pattern frequency statistics.

A template is an ordered set of N unit offsets; at lag L the offsets are
scaled by L and the grid is scanned over every placement where all N cells
fall inside.  Each placement yields a pattern code in [0, K^N): the category
at the j-th template location contributes ``category * K**j`` (base-K
positional encoding, location 0 in the least significant digit).

From the per-lag pattern counts:

    fop(i)       = count(i) / placements                (frequency of pattern)
    fop_rand(i)  = prod_j P[category_j(i)]              (independence baseline)
    sfop(i)      = fop(i) / fop_rand(i)
    odds(p)      = p / (1 - p)
    odds_ratio(i)= odds(fop(i)) / odds(fop_rand(i))
    log_odds(i)  = ln(odds_ratio(i)) clipped to [-4, 4], with a true zero
                   ratio mapped to -4
    order of structure = mean_i |odds_ratio(i) - 1|

Marginals P come by default from the extracted data itself, pooled over the
N template locations of every placement at that lag; whole-grid proportions
are available as an alternative.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import CategoricalGrid, proportions

__all__ = [
    "Template",
    "TEMPLATES",
    "PatternHistogram",
    "LagStats",
    "FOPCurve",
    "pattern_code",
    "decode_pattern",
    "scan",
    "fop",
    "fop_rand",
    "fop_rand_vector",
    "sfop",
    "odds_ratio",
    "log_odds",
    "order_of_structure",
    "fop_curve",
    "write_fop_csv",
    "write_order_csv",
]

LOG_ODDS_CLIP = 4.0


@dataclass(frozen=True)
class Template:
    """Ordered multi-point template of distinct unit offsets (dx, dy).

    The first offset must be (0, 0); the ordering defines the positional
    encoding of pattern codes, so two templates with the same offsets in a
    different order are different templates.
    """

    name: str
    offsets: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        offs = tuple((int(dx), int(dy)) for dx, dy in self.offsets)
        if len(offs) < 2:
            raise ValueError("template needs at least 2 locations")
        if offs[0] != (0, 0):
            raise ValueError(f"first template offset must be (0, 0), got {offs[0]}")
        if len(set(offs)) != len(offs):
            raise ValueError("template offsets must be distinct")
        object.__setattr__(self, "offsets", offs)

    @property
    def n(self) -> int:
        return len(self.offsets)


def _rect_template(name: str, width: int, height: int) -> Template:
    return Template(
        name,
        tuple((dx, dy) for dy in range(height) for dx in range(width)),
    )


TEMPLATES: dict[str, Template] = {
    "2x2": _rect_template("2x2", 2, 2),
    "2x3": _rect_template("2x3", 2, 3),
    "3x3": _rect_template("3x3", 3, 3),
}


@lru_cache(maxsize=32)
def _digit_table(k: int, n: int) -> np.ndarray:
    """(k**n, n) table of base-k digits; row i decodes pattern code i."""
    codes = np.arange(k**n, dtype=np.int64)
    table = np.empty((k**n, n), dtype=np.int64)
    for j in range(n):
        table[:, j] = codes % k
        codes = codes // k
    table.setflags(write=False)
    return table


def pattern_code(categories: Sequence[int], k: int) -> int:
    """Base-k positional code of a category sequence (location 0 first)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    code = 0
    for j, c in enumerate(categories):
        c = int(c)
        if not 0 <= c < k:
            raise ValueError(f"category {c} out of range for k={k}")
        code += c * k**j
    return code


def decode_pattern(code: int, k: int, n: int) -> tuple[int, ...]:
    """Inverse of :func:`pattern_code` for an n-location template."""
    if not 0 <= code < k**n:
        raise ValueError(f"code {code} out of range for k={k}, n={n}")
    digits = []
    for _ in range(n):
        digits.append(code % k)
        code //= k
    return tuple(digits)


class PatternHistogram:
    """Pattern counts for one (template, lag) scan.

    ``counts`` has length k**n indexed by pattern code; ``total`` is the
    number of placements; ``marginals`` are the category proportions of the
    extracted data pooled over all n template locations (the count of a code
    contributes each of its decoded categories once per placement).
    """

    __slots__ = ("k", "n", "counts", "total", "marginals")

    def __init__(self, k: int, n: int, counts: Sequence[int]):
        if k < 1 or n < 1:
            raise ValueError(f"k and n must be >= 1, got k={k}, n={n}")
        arr = np.asarray(counts, dtype=np.int64).copy()
        if arr.shape != (k**n,):
            raise ValueError(f"expected {k**n} counts, got {arr.shape}")
        if arr.size and arr.min() < 0:
            raise ValueError("counts must be non-negative")
        total = int(arr.sum())
        digits = _digit_table(k, n)
        cat_counts = np.zeros(k, dtype=np.int64)
        for c in range(k):
            cat_counts[c] = int(np.sum(arr * np.sum(digits == c, axis=1)))
        marginals = (
            cat_counts / (total * n) if total > 0 else np.zeros(k, dtype=np.float64)
        )
        arr.setflags(write=False)
        marginals.setflags(write=False)
        self.k = k
        self.n = n
        self.counts = arr
        self.total = total
        self.marginals = marginals

    def __repr__(self) -> str:
        return (
            f"PatternHistogram(k={self.k}, n={self.n}, total={self.total}, "
            f"occupied={int(np.count_nonzero(self.counts))}/{self.counts.size})"
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PatternHistogram)
            and self.k == other.k
            and self.n == other.n
            and np.array_equal(self.counts, other.counts)
        )


def scan(grid: CategoricalGrid, template: Template, lag: int) -> PatternHistogram:
    """Count pattern codes over all full placements of the template at a lag.

    Placements whose scaled offsets leave the grid are skipped (no wrap, no
    padding); an error is raised when no placement fits.
    """
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    g = grid.geometry
    offs = np.asarray(template.offsets, dtype=np.int64) * lag
    x_lo = int(-min(offs[:, 0].min(), 0))
    x_hi = int(g.nx - max(offs[:, 0].max(), 0))
    y_lo = int(-min(offs[:, 1].min(), 0))
    y_hi = int(g.ny - max(offs[:, 1].max(), 0))
    if x_hi <= x_lo or y_hi <= y_lo:
        raise ValueError(
            f"template {template.name!r} at lag {lag} does not fit in a "
            f"{g.nx}x{g.ny} grid"
        )
    vals = grid.values2d
    k, n = grid.k, template.n
    code = np.zeros((y_hi - y_lo, x_hi - x_lo), dtype=np.int64)
    for j, (dx, dy) in enumerate(offs.tolist()):
        window = vals[y_lo + dy : y_hi + dy, x_lo + dx : x_hi + dx]
        code += window * k**j
    counts = np.bincount(code.ravel(), minlength=k**n)
    return PatternHistogram(k, n, counts)


def fop(hist: PatternHistogram) -> np.ndarray:
    """Frequency of occurrence of each pattern code; sums to 1."""
    if hist.total <= 0:
        raise ValueError("empty histogram: no placements")
    return hist.counts / hist.total


def fop_rand(marginals: Sequence[float], code: int, n: int) -> float:
    """Independence baseline for one pattern: product of its categories'
    marginal proportions."""
    p = np.asarray(marginals, dtype=np.float64)
    digits = decode_pattern(code, p.size, n)
    return float(np.prod(p[list(digits)]))


def fop_rand_vector(marginals: Sequence[float], k: int, n: int) -> np.ndarray:
    """Independence baseline for every code in [0, k**n)."""
    p = np.asarray(marginals, dtype=np.float64)
    if p.shape != (k,):
        raise ValueError(f"expected {k} marginals, got {p.shape}")
    return np.prod(p[_digit_table(k, n)], axis=1)


def _resolve_marginals(
    hist: PatternHistogram, marginals: Sequence[float] | None
) -> np.ndarray:
    if marginals is None:
        return np.asarray(hist.marginals, dtype=np.float64)
    p = np.asarray(marginals, dtype=np.float64)
    if p.shape != (hist.k,):
        raise ValueError(f"expected {hist.k} marginals, got {p.shape}")
    return p


def sfop(
    hist: PatternHistogram, marginals: Sequence[float] | None = None
) -> np.ndarray:
    """Standardized FOP: fop / fop_rand, 0 for codes that never occur.

    Raises when a code occurs but its fop_rand is zero, which means the
    supplied marginals are inconsistent with the data.
    """
    p = _resolve_marginals(hist, marginals)
    f = fop(hist)
    fr = fop_rand_vector(p, hist.k, hist.n)
    bad = (hist.counts > 0) & (fr == 0.0)
    if np.any(bad):
        raise ValueError(
            "inconsistent marginals: observed pattern codes "
            f"{np.flatnonzero(bad)[:5].tolist()} have zero fop_rand"
        )
    out = np.zeros_like(f)
    occ = hist.counts > 0
    out[occ] = f[occ] / fr[occ]
    return out


def odds_ratio(
    hist: PatternHistogram, marginals: Sequence[float] | None = None
) -> np.ndarray:
    """Odds ratio of each pattern against the independence baseline.

    1 means the pattern occurs exactly as often as independent draws from the
    marginals would produce.  A pattern with fop = 1 has undefined odds and
    raises.  Codes with both fop and fop_rand zero (a category absent from
    the extracted data) are reported as 1: impossible under the baseline and
    absent in the data is no evidence of structure.
    """
    p = _resolve_marginals(hist, marginals)
    f = fop(hist)
    if np.any(f >= 1.0):
        raise ValueError(
            "odds undefined at certainty: pattern code "
            f"{int(np.argmax(f))} has fop = 1 (degenerate extracted data)"
        )
    fr = fop_rand_vector(p, hist.k, hist.n)
    bad = (hist.counts > 0) & (fr == 0.0)
    if np.any(bad):
        raise ValueError(
            "inconsistent marginals: observed pattern codes "
            f"{np.flatnonzero(bad)[:5].tolist()} have zero fop_rand"
        )
    out = np.ones_like(f)
    ok = fr > 0.0
    odds_data = f[ok] / (1.0 - f[ok])
    odds_rand = fr[ok] / (1.0 - fr[ok])
    out[ok] = odds_data / odds_rand
    return out


def log_odds(
    hist: PatternHistogram, marginals: Sequence[float] | None = None
) -> np.ndarray:
    """Natural log of the odds ratio, clipped to [-4, 4]; zero ratio -> -4."""
    ratio = odds_ratio(hist, marginals)
    out = np.full_like(ratio, -LOG_ODDS_CLIP)
    pos = ratio > 0.0
    out[pos] = np.clip(np.log(ratio[pos]), -LOG_ODDS_CLIP, LOG_ODDS_CLIP)
    return out


def order_of_structure(
    hist: PatternHistogram, marginals: Sequence[float] | None = None
) -> float:
    """Mean absolute deviation of the odds ratios from 1 over all k**n codes."""
    return float(np.mean(np.abs(odds_ratio(hist, marginals) - 1.0)))


@dataclass(frozen=True)
class LagStats:
    """All derived statistics for one lag of an FOP curve."""

    lag: int
    hist: PatternHistogram
    marginals: np.ndarray
    fop: np.ndarray
    fop_rand: np.ndarray
    sfop: np.ndarray
    odds_ratio: np.ndarray
    log_odds: np.ndarray
    order: float


@dataclass(frozen=True)
class FOPCurve:
    """Per-lag pattern statistics for one template on one grid."""

    template: Template
    k: int
    lags: tuple[int, ...]
    stats: tuple[LagStats, ...]
    marginal_source: str

    def at(self, lag: int) -> LagStats:
        for s in self.stats:
            if s.lag == lag:
                return s
        raise KeyError(f"lag {lag} not in curve (lags {self.lags})")

    def orders(self) -> np.ndarray:
        return np.array([s.order for s in self.stats])

    @classmethod
    def from_histograms(
        cls,
        template: Template,
        lags: Sequence[int],
        hists: Sequence[PatternHistogram],
        marginal_override: Sequence[np.ndarray] | None = None,
        marginal_source: str = "extracted",
    ) -> "FOPCurve":
        if len(lags) != len(hists):
            raise ValueError("lags and histograms differ in length")
        stats = []
        for i, (lag, hist) in enumerate(zip(lags, hists)):
            p = (
                np.asarray(marginal_override[i], dtype=np.float64)
                if marginal_override is not None
                else np.asarray(hist.marginals, dtype=np.float64)
            )
            stats.append(
                LagStats(
                    lag=int(lag),
                    hist=hist,
                    marginals=p,
                    fop=fop(hist),
                    fop_rand=fop_rand_vector(p, hist.k, hist.n),
                    sfop=sfop(hist, p),
                    odds_ratio=odds_ratio(hist, p),
                    log_odds=log_odds(hist, p),
                    order=order_of_structure(hist, p),
                )
            )
        k = hists[0].k
        return cls(template, k, tuple(int(l) for l in lags), tuple(stats),
                   marginal_source)


def fop_curve(
    grid: CategoricalGrid,
    template: Template,
    lags: Sequence[int],
    marginal_source: str = "extracted",
) -> FOPCurve:
    """Scan a grid at each lag and assemble the full statistics curve.

    ``marginal_source`` selects the independence baseline: "extracted" pools
    the scanned data at each lag (default), "global" uses whole-grid
    proportions at every lag.
    """
    lag_list = [int(l) for l in lags]
    if not lag_list:
        raise ValueError("at least one lag is required")
    if any(l < 1 for l in lag_list):
        raise ValueError(f"lags must be >= 1, got {lag_list}")
    if sorted(set(lag_list)) != lag_list:
        raise ValueError(f"lags must be strictly ascending, got {lag_list}")
    if marginal_source not in ("extracted", "global"):
        raise ValueError(f"unknown marginal source {marginal_source!r}")
    hists = [scan(grid, template, lag) for lag in lag_list]
    override = None
    if marginal_source == "global":
        p = proportions(grid)
        override = [p] * len(lag_list)
    return FOPCurve.from_histograms(
        template, lag_list, hists, override, marginal_source
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.10g}"


def write_fop_csv(curve: FOPCurve, path: str | Path) -> None:
    """One row per (lag, pattern code) with all derived statistics."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["lag", "pattern_code", "count", "fop", "fop_rand", "sfop",
             "odds_ratio", "log_odds"]
        )
        for s in curve.stats:
            for code in range(s.hist.counts.size):
                writer.writerow(
                    [
                        s.lag,
                        code,
                        int(s.hist.counts[code]),
                        _fmt(s.fop[code]),
                        _fmt(s.fop_rand[code]),
                        _fmt(s.sfop[code]),
                        _fmt(s.odds_ratio[code]),
                        _fmt(s.log_odds[code]),
                    ]
                )


def write_order_csv(curve: FOPCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lag", "order_of_structure"])
        for s in curve.stats:
            writer.writerow([s.lag, _fmt(s.order)])
