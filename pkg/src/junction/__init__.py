"""Intersection conflict oracle, scenario generation, and controller evaluation."""

__version__ = "0.1.0"

from .errors import GenerationError, ParseError, TransportError, ValidationError
from .layout import (
    Direction,
    IntersectionLayout,
    Movement,
    default_layout,
    emit_layout,
    parse_layout,
)
from .oracle import (
    ConflictAnalysis,
    ConflictPair,
    OracleConfig,
    analyze,
    emit_analysis,
    pairwise_conflict,
    parse_analysis,
    priority_compare,
    render_report,
    schedule_waits,
)
from .scenario import (
    GenParams,
    Scenario,
    Vehicle,
    arrival_time,
    describe_scenario,
    emit_scenario,
    generate_dataset,
    generate_scenario,
    parse_scenario,
    validate_vehicle,
)

__all__ = [
    "__version__",
    "ConflictAnalysis",
    "ConflictPair",
    "Direction",
    "GenParams",
    "GenerationError",
    "IntersectionLayout",
    "Movement",
    "OracleConfig",
    "ParseError",
    "Scenario",
    "TransportError",
    "ValidationError",
    "Vehicle",
    "analyze",
    "arrival_time",
    "default_layout",
    "describe_scenario",
    "emit_analysis",
    "emit_layout",
    "emit_scenario",
    "generate_dataset",
    "generate_scenario",
    "pairwise_conflict",
    "parse_analysis",
    "parse_layout",
    "parse_scenario",
    "priority_compare",
    "render_report",
    "schedule_waits",
    "validate_vehicle",
]
