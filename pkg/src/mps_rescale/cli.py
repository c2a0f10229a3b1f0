"""Batch command-line interface.

Every command is deterministic for an explicit --seed.  Exit codes: 0 on
success, 2 for usage errors (bad flags, unknown config keys), 1 for
computation or I/O failures.  A --config file holds key=value pairs using the
same keys as the long flags; explicit flags override the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .enhance import METHODS, enhance
from .extrapolate import compare_prediction, extrapolate_log_fop, write_prediction_csv
from .grid import (
    decimate,
    load_grid,
    load_samples,
    sample_random,
    sample_regular,
    save_field,
    save_grid,
    save_samples,
)
from .kriging import KrigingConfig, parse_variogram
from .patterns import TEMPLATES, fop_curve, write_fop_csv, write_order_csv
from .pipeline import PipelineParams, run_validation
from .rescale import (
    BlockSpec,
    mixed_curve,
    threshold,
    upscale_majority,
    upscale_proportion,
    write_mixed_curves_csv,
)
from .simulate import SimulationConfig, ensemble, write_ensemble_csv

log = logging.getLogger(__name__)

_FORMATS = ("auto", "gslib", "matrix")


class UsageError(ValueError):
    """Bad argument values; mapped to exit code 2 like argparse errors."""


# ---------------------------------------------------------------------------
# Argument value parsers
# ---------------------------------------------------------------------------

def parse_lags(text: str) -> list[int]:
    """"12" -> [12]; "1:50" -> 1..50; "1:50:5" -> stepped; "1,2,5" -> list."""
    try:
        if "," in text:
            return [int(t) for t in text.split(",")]
        if ":" in text:
            parts = [int(t) for t in text.split(":")]
            if len(parts) == 2:
                start, stop, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                start, stop, step = parts
            else:
                raise ValueError
            if step < 1 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(text)]
    except ValueError:
        raise UsageError(f"cannot parse lag spec {text!r}") from None


def parse_lag_pair(text: str) -> tuple[int, int]:
    lags = parse_lags(text)
    if len(lags) != 2:
        raise UsageError(f"expected two lags, got {text!r}")
    return lags[0], lags[1]


def parse_block(text: str) -> BlockSpec:
    try:
        if "x" in text:
            bx, by = (int(t) for t in text.split("x"))
        elif "," in text:
            bx, by = (int(t) for t in text.split(","))
        else:
            bx = by = int(text)
        return BlockSpec(bx, by)
    except ValueError:
        raise UsageError(f"cannot parse block spec {text!r}") from None


def parse_cutoffs(text: str) -> list[float]:
    """"0:1:0.05" -> inclusive sweep; "0.1,0.25" -> explicit list."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return [start + i * step for i in range(count)]
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse cutoff spec {text!r}") from None


def _kriging_config(args) -> KrigingConfig:
    radius = args.radius if args.radius is not None else float("inf")
    return KrigingConfig(max_neighbors=args.max_neigh, search_radius=radius)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_fop(args) -> int:
    grid = load_grid(args.in_path, args.k, args.format)
    curve = fop_curve(
        grid, TEMPLATES[args.template], parse_lags(args.lags), args.marginals
    )
    write_fop_csv(curve, f"{args.out}_fop.csv")
    write_order_csv(curve, f"{args.out}_order.csv")
    log.info("wrote %s_fop.csv and %s_order.csv", args.out, args.out)
    return 0


def cmd_extrapolate(args) -> int:
    grid = load_grid(args.in_path, args.k, args.format)
    l1, l2 = parse_lag_pair(args.from_lags)
    target = 2 * l1 - l2
    lags = sorted({l1, l2} | ({target} if target >= 1 else set()))
    curve = fop_curve(grid, TEMPLATES[args.template], lags, args.marginals)
    result = extrapolate_log_fop(curve, (l1, l2))
    actual = None
    report = None
    if target >= 1:
        with np.errstate(divide="ignore"):
            actual = np.log(curve.at(target).fop)
        actual[~np.isfinite(actual)] = np.nan
        report = compare_prediction(result.log_fop, actual)
        log.info(
            "lag %d prediction: mae=%.4f rank_correlation=%.4f over %d codes",
            target, report.mae, report.rank_correlation, report.n_pairs,
        )
    write_prediction_csv(result, args.out, actual, report)
    return 0


def cmd_upscale(args) -> int:
    grid = load_grid(args.in_path, args.k, args.format)
    block = parse_block(args.block)
    if args.mode == "majority":
        save_grid(upscale_majority(grid, block), args.out, title="majority upscale")
        return 0
    prop = upscale_proportion(grid, block, args.category)
    save_field(prop, args.out, title=f"proportion of category {args.category}")
    if args.binary_out:
        if args.cutoff is None:
            raise UsageError("--binary-out requires --cutoff")
        save_grid(
            threshold(prop, args.cutoff),
            args.binary_out,
            title=f"threshold at {args.cutoff:g}",
        )
    if args.mixed_out:
        cutoffs = parse_cutoffs(args.cutoffs) if args.cutoffs else None
        write_mixed_curves_csv([mixed_curve(prop, cutoffs)], args.mixed_out)
    return 0


def cmd_decimate(args) -> int:
    grid = load_grid(args.in_path, args.k, args.format)
    step_y = args.step_y if args.step_y is not None else args.step
    save_grid(
        decimate(grid, args.step, step_y),
        args.out,
        title=f"decimated by ({args.step}, {step_y})",
    )
    return 0


def cmd_sample(args) -> int:
    grid = load_grid(args.in_path, args.k, args.format)
    if args.mode == "random":
        samples = sample_random(grid, args.n, args.seed)
    else:
        samples = sample_regular(grid, args.n)
    save_samples(samples, args.out)
    log.info("wrote %d samples to %s", len(samples), args.out)
    return 0


def cmd_enhance(args) -> int:
    grid = load_grid(args.in_path, args.k, args.format)
    model = parse_variogram(args.variogram) if args.variogram else None
    out = enhance(grid, args.factor, args.method, model, _kriging_config(args))
    save_grid(out, args.out, title=f"{args.method} enhancement x{args.factor}")
    return 0


def cmd_simulate(args) -> int:
    ti = load_grid(args.ti, args.k, args.format)
    geometry = ti.geometry
    if args.nx is not None or args.ny is not None:
        if args.nx is None or args.ny is None:
            raise UsageError("--nx and --ny must be given together")
        geometry = type(geometry)(
            nx=args.nx,
            ny=args.ny,
            cell_size_x=geometry.cell_size_x,
            cell_size_y=geometry.cell_size_y,
            origin_x=geometry.origin_x,
            origin_y=geometry.origin_y,
        )
    conditioning = load_samples(args.samples) if args.samples else None
    config = SimulationConfig(
        template_size=args.template_size,
        seed=args.seed,
        min_replicates=args.min_replicates,
        max_dropped=args.max_dropped,
    )
    reals, freq = ensemble(
        ti, geometry, conditioning, config, args.n, workers=args.workers
    )
    digits = max(3, len(str(args.n - 1)))
    for i, real in enumerate(reals):
        save_grid(
            real,
            f"{args.out}_r{i:0{digits}d}.txt",
            title=f"realization {i} (seed {config.seed + i})",
        )
    write_ensemble_csv(freq, geometry, f"{args.out}_ensemble.csv")
    return 0


def cmd_pipeline_validate(args) -> int:
    reference = load_grid(args.reference, args.k, args.format)
    model = parse_variogram(args.variogram) if args.variogram else None
    params = PipelineParams(
        factor=args.factor,
        n_samples=args.samples,
        n_realizations=args.realizations,
        block=parse_block(args.block),
        category=args.category,
        methods=tuple(args.methods.split(",")),
        cutoffs=tuple(parse_cutoffs(args.cutoffs)),
        seed=args.seed,
        template_size=args.template_size,
        min_replicates=args.min_replicates,
        variogram=model,
        kriging=_kriging_config(args),
    )
    result = run_validation(reference, params, args.out_dir)
    for name in result.mean_curves:
        if name != "reference":
            log.info(
                "L1(mean curve, reference) for %s: %.6f",
                name,
                result.distance(name, "reference"),
            )
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, *, grid_in: str = "--in") -> None:
    p.add_argument("--config", help="key=value file of flag defaults")
    p.add_argument("--verbose", action="store_true", help="log at INFO level")
    if grid_in:
        p.add_argument(grid_in, dest="in_path", required=True, help="input grid file")
        p.add_argument("--k", type=int, required=True, help="number of categories")
        p.add_argument(
            "--format", choices=_FORMATS, default="auto", help="input grid format"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mps-rescale",
        description="Pattern statistics, upscaling and resolution enhancement "
        "for categorical grids",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fop", help="lag-indexed pattern statistics tables")
    _add_common(p)
    p.add_argument("--template", choices=sorted(TEMPLATES), default="2x2")
    p.add_argument("--lags", required=True, help="e.g. 1:150 or 1,2,5")
    p.add_argument(
        "--marginals", choices=("extracted", "global"), default="extracted"
    )
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_fop)

    p = sub.add_parser("extrapolate", help="two-point log-FOP extrapolation")
    _add_common(p)
    p.add_argument("--template", choices=sorted(TEMPLATES), default="2x2")
    p.add_argument("--from-lags", default="1,2", help="source lag pair L1,L2")
    p.add_argument(
        "--marginals", choices=("extracted", "global"), default="extracted"
    )
    p.add_argument("--out", required=True, help="prediction CSV path")
    p.set_defaults(func=cmd_extrapolate)

    p = sub.add_parser("upscale", help="block upscaling to majority or proportions")
    _add_common(p)
    p.add_argument("--block", required=True, help="block cells, e.g. 10 or 10x10")
    p.add_argument("--mode", choices=("majority", "proportion"), default="majority")
    p.add_argument("--category", type=int, default=1, help="proportion target")
    p.add_argument("--cutoff", type=float, help="threshold for --binary-out")
    p.add_argument("--cutoffs", help="mixed-curve sweep, e.g. 0:1:0.05")
    p.add_argument("--binary-out", help="write thresholded grid here")
    p.add_argument("--mixed-out", help="write mixed-material curve CSV here")
    p.add_argument("--out", required=True, help="output grid/field file")
    p.set_defaults(func=cmd_upscale)

    p = sub.add_parser("decimate", help="keep every step-th cell")
    _add_common(p)
    p.add_argument("--step", type=int, required=True)
    p.add_argument("--step-y", type=int, help="y step when different from --step")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decimate)

    p = sub.add_parser("sample", help="extract point samples from a grid")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("random", "regular"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="samples CSV path")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("enhance", help="refine a grid by an integer factor")
    _add_common(p)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--variogram", help="type,nugget,sill,range[,azimuth,ratio]")
    p.add_argument("--max-neigh", type=int, default=16)
    p.add_argument("--radius", type=float, help="search radius (default unlimited)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("simulate", help="sequential simulation from a training image")
    _add_common(p, grid_in="")
    p.add_argument("--ti", required=True, help="training image file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--format", choices=_FORMATS, default="auto")
    p.add_argument("--samples", help="conditioning CSV (x,y,category)")
    p.add_argument("--nx", type=int, help="target dims (default: TI dims)")
    p.add_argument("--ny", type=int)
    p.add_argument("--n", type=int, default=1, help="number of realizations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--template-size", type=int, default=12)
    p.add_argument("--min-replicates", type=int, default=1)
    p.add_argument("--max-dropped", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "pipeline-validate",
        help="decimate, enhance, simulate and compare mixed-material curves",
    )
    _add_common(p, grid_in="")
    p.add_argument("--reference", required=True, help="fine reference grid file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--format", choices=_FORMATS, default="auto")
    p.add_argument("--factor", type=int, default=4)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--realizations", type=int, default=10)
    p.add_argument("--block", default="10x10")
    p.add_argument("--category", type=int, default=1)
    p.add_argument("--methods", default="dfk,nearest")
    p.add_argument("--cutoffs", default="0:1:0.05")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--template-size", type=int, default=16)
    p.add_argument("--min-replicates", type=int, default=20)
    p.add_argument("--variogram", help="type,nugget,sill,range[,azimuth,ratio]")
    p.add_argument("--max-neigh", type=int, default=16)
    p.add_argument("--radius", type=float)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline_validate)

    return parser


def _read_config(path: str) -> dict[str, str]:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Load --config defaults into the invoked subcommand's parser."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    cfg = _read_config(path)
    subparsers = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    command = next((t for t in argv if t in subparsers.choices), None)
    if command is None:
        return
    sub = subparsers.choices[command]
    by_flag: dict[str, argparse.Action] = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                by_flag[opt[2:]] = action
    defaults = {}
    for key, value in cfg.items():
        action = by_flag.get(key) or by_flag.get(key.replace("_", "-"))
        if action is None:
            raise UsageError(f"unknown config key {key!r} for command {command!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = value.lower() in ("1", "true", "yes")
        elif action.type is int:
            defaults[action.dest] = int(value)
        elif action.type is float:
            defaults[action.dest] = float(value)
        else:
            if action.choices and value not in action.choices:
                raise UsageError(
                    f"config key {key!r}: {value!r} not in {sorted(action.choices)}"
                )
            defaults[action.dest] = value
    sub.set_defaults(**defaults)
    # Required flags satisfied by the config file must not force a CLI value
    for action in sub._actions:
        if action.dest in defaults and action.required:
            action.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
