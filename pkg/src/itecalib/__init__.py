"""Cumulative calibration assessment for treatment-benefit and risk models.

Builds standardized cumulative-prediction-error processes from randomized
validation data and tests them against Brownian-motion asymptotics: a
maximum-deviation test, a two-part end-point-plus-bridge test, and their
Fisher combination. Ships the accompanying Monte Carlo study engine and an
SVG figure renderer.
"""

from .benefit import (
    BenefitSeries,
    ConditionalMoments,
    centered_increments,
    conditional_moments,
    conditional_s_process,
    cumulative_benefit,
    marginal_s_process,
)
from .domain import (
    ITE_CONDITIONAL,
    ITE_MARGINAL,
    ORDER_BY_DELTA,
    ORDER_BY_KEY,
    RISK,
    DegenerateVariance,
    EmptySample,
    FieldOutOfRange,
    MissingBaselineRisk,
    MissingOrderKey,
    OrderedSample,
    ProcessPath,
    SingleArmSample,
    SubjectRecord,
    TestReport,
    ValidationError,
    build_sample,
    sample_from_arrays,
)
from .inference import (
    PValue,
    bm_test,
    bridge_test,
    fisher_combine,
    kolmogorov_quantile,
    kolmogorov_sf,
    normal_two_sided_p,
    std_normal_cdf,
    std_normal_quantile,
    sup_abs_bm_quantile,
    sup_abs_bm_sf,
)
from .io import (
    BadValue,
    EmptyFile,
    MissingColumn,
    parse_dataset,
    write_dataset,
)
from .plotting import EmptyPath, PlotSpec, render_plot, write_plot
from .risk import (
    PerArmCompoundResult,
    RiskSampleView,
    per_arm_compound_test,
    risk_cumulative_errors,
    risk_s_process,
    risk_view,
)
from .simulation import (
    McSummary,
    ScenarioSpec,
    generate_replicate,
    load_scenario_catalog,
    run_monte_carlo,
    scenario_from_catalog,
    true_calibration_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "BadValue",
    "BenefitSeries",
    "ConditionalMoments",
    "DegenerateVariance",
    "EmptyFile",
    "EmptyPath",
    "EmptySample",
    "FieldOutOfRange",
    "ITE_CONDITIONAL",
    "ITE_MARGINAL",
    "McSummary",
    "MissingBaselineRisk",
    "MissingColumn",
    "MissingOrderKey",
    "ORDER_BY_DELTA",
    "ORDER_BY_KEY",
    "OrderedSample",
    "PerArmCompoundResult",
    "PlotSpec",
    "ProcessPath",
    "PValue",
    "RISK",
    "RiskSampleView",
    "ScenarioSpec",
    "SingleArmSample",
    "SubjectRecord",
    "TestReport",
    "ValidationError",
    "bm_test",
    "bridge_test",
    "build_sample",
    "centered_increments",
    "conditional_moments",
    "conditional_s_process",
    "cumulative_benefit",
    "fisher_combine",
    "generate_replicate",
    "kolmogorov_quantile",
    "kolmogorov_sf",
    "load_scenario_catalog",
    "marginal_s_process",
    "normal_two_sided_p",
    "parse_dataset",
    "per_arm_compound_test",
    "render_plot",
    "risk_cumulative_errors",
    "risk_s_process",
    "risk_view",
    "run_monte_carlo",
    "sample_from_arrays",
    "scenario_from_catalog",
    "std_normal_cdf",
    "std_normal_quantile",
    "sup_abs_bm_quantile",
    "sup_abs_bm_sf",
    "true_calibration_metrics",
    "write_dataset",
    "write_plot",
]
