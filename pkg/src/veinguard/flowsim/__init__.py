from .mobility import (
    ConfigurationError,
    MobilityParseError,
    SyntheticMobility,
    TraceMobility,
    Trajectory,
    highway_platoon,
    load_mobility,
    parse_ns2_trace,
)
from .propagation import crossover_distance, two_ray_rx_power
from .simulator import FlowAccumulator, FlowKey, SimConfig, finalize_flow, node_address, run_many, run_simulation

__all__ = [
    "ConfigurationError", "FlowAccumulator", "FlowKey", "MobilityParseError", "SimConfig",
    "SyntheticMobility", "TraceMobility", "Trajectory", "crossover_distance", "finalize_flow",
    "highway_platoon", "load_mobility", "node_address", "parse_ns2_trace", "run_many",
    "run_simulation", "two_ray_rx_power",
]
