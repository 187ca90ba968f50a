"""Complexity accounting, scaling strategies and runtime models for staged convnets."""

__version__ = "0.1.0"

from .complexity import ComplexityReport, block_complexity, conv_complexity, network_complexity, stage_complexity
from .errors import (
    DegenerateDataError,
    DegenerateResolutionError,
    DesignError,
    DivisibilityError,
    DomainError,
    ExhaustionError,
    InvalidSpecError,
    SchemaError,
    ScalekitError,
    SpecParseError,
    UnknownModelError,
)
from .families import (
    DesignSpaceRanges,
    RegNetParams,
    build_efficientnet,
    build_regnet,
    get_model,
    registry_names,
    sample_design_space,
)
from .ir import (
    BlockKind,
    HeadSpec,
    NetworkSpec,
    StageSpec,
    StemSpec,
    deserialize,
    load_spec,
    save_spec,
    serialize,
    validate_network,
)
from .runtime import (
    FeatureSet,
    Measurement,
    RuntimeModel,
    correlation_report,
    fit_runtime,
    pearson,
    predict_runtime,
)
from .scaling import (
    ScaleRequest,
    ScalingPolicy,
    fast_policy,
    policy_from_name,
    predicted_multipliers,
    quantize_network,
    scale_network,
    sweep,
)
