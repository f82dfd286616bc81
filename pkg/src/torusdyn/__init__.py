"""torusdyn: a numerical laboratory for hyperbolic torus maps.

Periodic-orbit enumeration, dynamical determinants and their spectral
factorizations, stable/unstable direction fields, and ergodic integrals along
the unit stable flow, for maps of the form (integer hyperbolic matrix) +
(trigonometric perturbation) on the two-torus.
"""

__version__ = "0.1.0"

from .errors import (
    ConeViolation,
    ContinuationCollision,
    CountOverflow,
    EigenSplitFailure,
    IncompleteDatabase,
    InsufficientDecaySignal,
    InverseNewtonFailure,
    MeanNotZero,
    MissingMultipliers,
    NewtonDivergence,
    NoConvergence,
    NotHyperbolic,
    NotOrientable,
    OrientationAmbiguous,
    ResolutionExceeded,
    SigmaMinusOne,
    SpecError,
    StepUnderflow,
    TorusDynError,
    TransversalityFailure,
)
from .maps import (
    ConeReport,
    IntegerMatrix2,
    LinearModel,
    MapSpec,
    PerturbationTerm,
    evaluate_lift,
    evaluate_torus,
    inverse_lift,
    jacobian,
    linear_model,
    make_spec,
    reduce_torus,
    require_cone,
    torus_distance,
    verify_cone_condition,
)
from .series import (
    PowerSeries,
    SeriesZero,
    find_zeros,
    polynomial_from_roots,
    trim_degree,
)
from .orbits import (
    LevelData,
    OrbitDatabase,
    ValidationReport,
    default_level_cap,
    enumerate_linear_level,
    exact_fixed_count,
    load_or_build,
    smith_normal_form,
)
from .spectral import (
    BASE_GROUPING,
    EXTENDED_GROUPING,
    NAMED_WEIGHTS,
    IdentityReport,
    RegularityBounds,
    ResonanceReport,
    check_identity,
    closed_form_count,
    determinant_series,
    product_formula_series,
    resonance_report,
    rho_bounds,
    spectral_sum,
    spectral_sums,
    split_multipliers,
    zeta_closed_form,
    zeta_from_counts,
)
from .bundles import (
    DirectionSample,
    StretchSummary,
    default_depth,
    grid_points,
    sample_directions,
    stretch_summary,
    write_direction_csv,
)
from .horocycle import (
    CoboundaryReport,
    DeviationReport,
    DriftEstimate,
    FlowIntegral,
    Observable,
    RotationReport,
    coboundary_report,
    deviation_exponent,
    deviation_suite,
    estimate_drift,
    horocycle_integral,
    linear_integral_values,
    linear_mode_bound,
    linear_observable_bound,
    rotation_number,
)
from .mme import (
    CorrelationReport,
    DecayFit,
    EquidistributionReport,
    character_averages,
    correlation_decay,
    decay_rate_fit,
    empirical_correlations,
    equidistribution_report,
    lebesgue_correlations,
    linear_level_character,
)
from .corpus import (
    by_label,
    cat_linear,
    cat_sin,
    fib_linear,
    standard_corpus,
    write_manifest,
)
