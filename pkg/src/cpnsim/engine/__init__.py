"""Generic timed coloured-Petri-net simulation engine."""

from cpnsim.engine.core import (
    DEFAULT_STEP_LIMIT,
    add_tokens,
    advance_time,
    enabled_bindings,
    fire,
    kernel_name,
    run,
    step,
)
from cpnsim.engine.types import (
    All,
    BOOL_SET,
    Binding,
    ColourSet,
    DeadMarking,
    EngineError,
    Fired,
    FiringError,
    INT_SET,
    Marking,
    ModelStructureError,
    Multiset,
    Net,
    NetBuilder,
    OutputArc,
    Place,
    SimState,
    StepEvent,
    StepLimitExceeded,
    TimeAdvanced,
    TransitionSpec,
    UNIT,
    UNIT_SET,
    Unit,
    Var,
    instance_set,
    list_set,
)

__all__ = [
    "All",
    "BOOL_SET",
    "Binding",
    "ColourSet",
    "DEFAULT_STEP_LIMIT",
    "DeadMarking",
    "EngineError",
    "Fired",
    "FiringError",
    "INT_SET",
    "Marking",
    "ModelStructureError",
    "Multiset",
    "Net",
    "NetBuilder",
    "OutputArc",
    "Place",
    "SimState",
    "StepEvent",
    "StepLimitExceeded",
    "TimeAdvanced",
    "TransitionSpec",
    "UNIT",
    "UNIT_SET",
    "Unit",
    "Var",
    "add_tokens",
    "advance_time",
    "enabled_bindings",
    "fire",
    "instance_set",
    "kernel_name",
    "list_set",
    "run",
    "step",
]
