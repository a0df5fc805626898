"""National citation impact indicators for article corpora.

Core pieces: fractional-counting corpus model, log-citation regression,
weighted geometric/arithmetic mean indicators, top-X% shares with
fractional tie credit, closed-form and bootstrap confidence intervals,
cross-subject trend aggregation, and a seeded synthetic-corpus generator
with analytic ground truth for calibration experiments.
"""

from .aggregate import (
    TableCell,
    TrendPoint,
    TrendSeries,
    ci_width_series,
    indicator_table,
    median_across_subjects,
)
from .corpus import (
    OTHERS,
    ArticleRecord,
    CountrySet,
    ParseResult,
    SubjectYearSlice,
    country_share,
    load_corpus,
    parse_corpus,
    serialize_corpus,
    share_weights,
    weighted_count,
)
from .indicators import (
    ARITH,
    GEO,
    METHODS,
    REG_GEO,
    TOP_X,
    BootstrapConfig,
    IndicatorResult,
    arith_indicator,
    bootstrap_ci,
    geo_indicator,
    geo_indicator_ci,
    top_credits,
    top_share,
    top_share_ci,
)
from .intervals import CI_CORRECTED, CI_MODES, CI_PAPER, BootstrapInterval, Interval
from .regression import (
    DesignMatrix,
    RegressionFit,
    build_design,
    ols_fit,
    reg_indicator,
    reg_indicator_ci,
)
from .stats import (
    MomentReport,
    arithmetic_mean,
    geometric_mean,
    log1p_transform,
    moments,
)
from .synth import (
    CountryProfile,
    CountryTruth,
    CoverageReport,
    GroundTruth,
    SynthSpec,
    coverage_experiment,
    expected_citation_mean,
    expected_log1p_citation,
    generate_corpus,
    ground_truth,
)

__version__ = "0.1.0"
