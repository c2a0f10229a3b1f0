"""Multi-point pattern statistics and resolution enhancement for
categorical grids.

The package covers the full workflow: lag-indexed pattern-frequency
statistics (FOP, standardized FOP, odds ratios, order of structure),
log-space extrapolation of FOP curves, block upscaling with mixed-material
accounting, ordinary kriging, training-image resolution enhancement
(replication, kernel interpolation of indicators, signed-distance kriging)
and single-grid sequential pattern simulation, plus a batch CLI
(``mps-rescale``) that chains them into a validation pipeline.
"""

from .enhance import (
    METHODS,
    enhance,
    enhance_df_kriging,
    enhance_indicator,
    enhance_nearest,
    fine_geometry,
    signed_distance,
)
from .extrapolate import (
    ExtrapolationResult,
    PredictionReport,
    compare_prediction,
    extrapolate_log_fop,
)
from .grid import (
    CategoricalGrid,
    ContinuousField,
    GridFormatError,
    GridGeometry,
    SampleSet,
    decimate,
    load_field,
    load_grid,
    load_samples,
    proportions,
    sample_random,
    sample_regular,
    save_field,
    save_grid,
    save_samples,
)
from .kriging import (
    KrigingConfig,
    KrigingResult,
    VariogramModel,
    covariance,
    krige_grid,
    krige_point,
    ok_weights,
    parse_variogram,
    variogram,
)
from .patterns import (
    TEMPLATES,
    FOPCurve,
    PatternHistogram,
    Template,
    fop,
    fop_curve,
    fop_rand,
    fop_rand_vector,
    log_odds,
    odds_ratio,
    order_of_structure,
    pattern_code,
    decode_pattern,
    scan,
    sfop,
)
from .pipeline import PipelineParams, PipelineResult, curve_l1, run_validation
from .rescale import (
    BlockSpec,
    default_cutoffs,
    mixed_curve,
    mixed_fraction,
    threshold,
    upscale_majority,
    upscale_proportion,
)
from .simulate import (
    PatternTree,
    SimulationConfig,
    build_tree,
    ensemble,
    search_template,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # grid
    "GridFormatError", "GridGeometry", "CategoricalGrid", "ContinuousField",
    "SampleSet", "load_grid", "save_grid", "load_field", "save_field",
    "load_samples", "save_samples", "proportions", "decimate",
    "sample_random", "sample_regular",
    # patterns
    "Template", "TEMPLATES", "PatternHistogram", "FOPCurve", "pattern_code",
    "decode_pattern", "scan", "fop", "fop_rand", "fop_rand_vector", "sfop",
    "odds_ratio", "log_odds", "order_of_structure", "fop_curve",
    # extrapolate
    "ExtrapolationResult", "PredictionReport", "extrapolate_log_fop",
    "compare_prediction",
    # rescale
    "BlockSpec", "upscale_majority", "upscale_proportion", "threshold",
    "mixed_fraction", "mixed_curve", "default_cutoffs",
    # kriging
    "VariogramModel", "KrigingConfig", "KrigingResult", "variogram",
    "covariance", "parse_variogram", "ok_weights", "krige_point", "krige_grid",
    # enhance
    "METHODS", "signed_distance", "fine_geometry", "enhance_nearest",
    "enhance_indicator", "enhance_df_kriging", "enhance",
    # simulate
    "PatternTree", "SimulationConfig", "search_template", "build_tree",
    "simulate", "ensemble",
    # pipeline
    "PipelineParams", "PipelineResult", "curve_l1", "run_validation",
]
