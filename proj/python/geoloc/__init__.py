from ._core import (
    ConfigError,
    InfeasibleError,
    LwwRegister,
    OrMap,
    PnCounter,
    ProtocolConfig,
    ProtocolError,
    TraceError,
    distance_meters,
    run_scenario,
    synthesize,
    within,
)

__all__ = [
    "ConfigError",
    "InfeasibleError",
    "LwwRegister",
    "OrMap",
    "PnCounter",
    "ProtocolConfig",
    "ProtocolError",
    "TraceError",
    "distance_meters",
    "run_scenario",
    "synthesize",
    "within",
]
