"""Two-point extrapolation of FOP curves in natural-log space.

Pattern frequencies of many images decay close to log-linearly over the first
few lags, so the value at the lag below the measured pair can be predicted by
extending the line through the two measured points:

    log f_hat(L0) = 2 log f(L1) - log f(L2),   L0 = 2*L1 - L2

Codes with a zero FOP at either source lag have no log value and are flagged
unpredictable; predictions above FOP = 1 are clamped to 1 and flagged.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as _stats

from .patterns import FOPCurve

__all__ = [
    "FLAG_OK",
    "FLAG_UNPREDICTABLE",
    "FLAG_OVERSHOOT",
    "ExtrapolationResult",
    "PredictionReport",
    "extrapolate_log_fop",
    "compare_prediction",
    "write_prediction_csv",
]

FLAG_OK = "ok"
FLAG_UNPREDICTABLE = "unpredictable"
FLAG_OVERSHOOT = "overshoot"


@dataclass(frozen=True)
class ExtrapolationResult:
    """Predicted log-FOP per pattern code at the target lag.

    ``log_fop`` holds NaN where the prediction is flagged unpredictable.
    """

    target_lag: int
    from_lags: tuple[int, int]
    log_fop: np.ndarray
    flags: tuple[str, ...]

    def predictable(self) -> np.ndarray:
        return np.array([f != FLAG_UNPREDICTABLE for f in self.flags])


def extrapolate_log_fop(
    curve: FOPCurve, from_lags: tuple[int, int] = (1, 2)
) -> ExtrapolationResult:
    """Extend the log-FOP line through two measured lags down one spacing.

    ``from_lags = (L1, L2)`` with L1 < L2 predicts lag ``2*L1 - L2``; the
    default (1, 2) targets the 0-equivalent lag below the native spacing.
    Both source lags must be present in the curve and the target must be
    non-negative.
    """
    l1, l2 = int(from_lags[0]), int(from_lags[1])
    if l1 >= l2:
        raise ValueError(f"from_lags must be ascending, got ({l1}, {l2})")
    target = 2 * l1 - l2
    if target < 0:
        raise ValueError(
            f"target lag 2*{l1} - {l2} = {target} is negative; "
            "choose a closer source pair"
        )
    f1 = curve.at(l1).fop
    f2 = curve.at(l2).fop
    sources_ok = (f1 > 0.0) & (f2 > 0.0)
    log_fop = np.full(f1.shape, np.nan)
    with np.errstate(divide="ignore"):
        log_fop[sources_ok] = 2.0 * np.log(f1[sources_ok]) - np.log(f2[sources_ok])
    flags = np.full(f1.shape, FLAG_OK, dtype=object)
    flags[~sources_ok] = FLAG_UNPREDICTABLE
    over = sources_ok & (log_fop > 0.0)
    log_fop[over] = 0.0
    flags[over] = FLAG_OVERSHOOT
    return ExtrapolationResult(target, (l1, l2), log_fop, tuple(flags.tolist()))


@dataclass(frozen=True)
class PredictionReport:
    n_pairs: int
    mae: float
    rank_correlation: float
    excluded: tuple[int, ...]


def compare_prediction(predicted, actual) -> PredictionReport:
    """MAE and Spearman rank correlation between two log-FOP vectors.

    Entries that are NaN or infinite on either side (unpredictable codes,
    codes absent from the measured curve) are excluded pairwise and listed in
    the report.  Raises when no comparable pair remains.  A degenerate rank
    correlation (fewer than two pairs of distinct values) is reported as 0.
    """
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape or p.ndim != 1:
        raise ValueError(f"shape mismatch: {p.shape} vs {a.shape}")
    valid = np.isfinite(p) & np.isfinite(a)
    excluded = tuple(int(i) for i in np.flatnonzero(~valid))
    if not np.any(valid):
        raise ValueError("no comparable pattern codes (all excluded)")
    mae = float(np.mean(np.abs(p[valid] - a[valid])))
    if valid.sum() < 2:
        rho = 0.0
    else:
        with warnings.catch_warnings():
            # constant input has no defined rank order; reported as 0 below
            warnings.simplefilter("ignore", _stats.ConstantInputWarning)
            rho = _stats.spearmanr(p[valid], a[valid]).statistic
        rho = float(rho) if np.isfinite(rho) else 0.0
    return PredictionReport(int(valid.sum()), mae, rho, excluded)


def write_prediction_csv(
    result: ExtrapolationResult,
    path: str | Path,
    actual=None,
    report: PredictionReport | None = None,
) -> None:
    """Per-code prediction table, optionally with actuals and a summary row."""
    a = None if actual is None else np.asarray(actual, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["pattern_code", "predicted_log_fop", "actual_log_fop", "flag"]
        )
        for code in range(result.log_fop.size):
            pred = result.log_fop[code]
            act = np.nan if a is None else a[code]
            writer.writerow(
                [
                    code,
                    "" if not np.isfinite(pred) else f"{pred:.10g}",
                    "" if not np.isfinite(act) else f"{act:.10g}",
                    result.flags[code],
                ]
            )
        if report is not None:
            fh.write(
                f"# n_pairs={report.n_pairs} mae={report.mae:.10g} "
                f"rank_correlation={report.rank_correlation:.10g}\n"
            )
