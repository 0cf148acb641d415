"""Blind cognitive MAC protocols: a secondary transmitter/receiver pair
learning Markov primary traffic online while staying synchronised through
ACK-piggybacked state."""

from .channel import ChannelSpec, stationary_free_prob
from .config import ScenarioConfig, load_config, preset
from .simulator import ProtocolKind, ScenarioSampler, monte_carlo, run_block
from .whittle import ArmModel, IndexTable, whittle_index

__all__ = [
    "ArmModel",
    "ChannelSpec",
    "IndexTable",
    "ProtocolKind",
    "ScenarioConfig",
    "ScenarioSampler",
    "load_config",
    "monte_carlo",
    "preset",
    "run_block",
    "stationary_free_prob",
    "whittle_index",
]
