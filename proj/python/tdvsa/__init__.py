"""Transmission-distribution voltage stability analysis (T-VSA, D-VSA, TD-VSA)."""

from ._core import (
    InfeasibleError,
    ModelError,
    Network,
    StallError,
    apply_der,
    apply_load_shed,
    compose_td,
    d_vsa,
    feeder,
    hypersurface,
    ieee9,
    load_network,
    run_scenario,
    solve,
    td_vsa,
    trace_pv,
    validate_scenario,
)

__all__ = [
    "InfeasibleError",
    "ModelError",
    "Network",
    "StallError",
    "apply_der",
    "apply_load_shed",
    "compose_td",
    "d_vsa",
    "feeder",
    "hypersurface",
    "ieee9",
    "load_network",
    "run_scenario",
    "solve",
    "td_vsa",
    "trace_pv",
    "validate_scenario",
]
