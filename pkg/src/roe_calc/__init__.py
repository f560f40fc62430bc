"""Metrics on disjoint unions of finite metric spaces and finite-propagation operators."""

from .almost_isometry import (
    CloseMapFailure,
    DefectReport,
    PartialMap,
    compose_maps,
    defect,
    effective_constant,
    extract_close_map,
    glue_from_map,
    near_identity_check,
    sandwich_check,
)
from .errors import EmptySupportError, PositivityViolation, SchemaError, StructuralError
from .metric import (
    FiniteMetricSpace,
    GlueMetric,
    MetricFamily,
    ValidationReport,
    Violation,
    adjoint_glue,
    compose_glue,
    growth_function,
    identity_glue,
    meet_glue,
    minplus,
    self_isometries,
    shift_glue,
    validate_glue,
    validate_metric,
)
from .operators import (
    Band,
    BandDecomposition,
    FinitePropagationOperator,
    adjoint,
    add,
    band_decompose,
    compose,
    elementary,
    factor_through,
    operator_norm,
    propagation,
    propagation_bound_check,
    scale,
)
from .order import (
    DominationProfile,
    ObstructionCertificate,
    OrderVerdict,
    close_pair_matching,
    domination_profile,
    equivalence_check,
    idempotent_check,
    inv_semi_check,
    maximality_inequality_check,
    order_check,
    selfadjoint_check,
    upper_bound_feasibility,
)

__version__ = "0.1.0"
