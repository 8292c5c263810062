"""Distributed average-consensus protocols and a deterministic simulator.

Six per-node protocols (flooding bench-mark, distributed averaging, its
discretized variant, one-hop, gossip, and randomized information
spreading) over arbitrary delayed directed communication sequences,
with temporal-connectivity classification, resource-cost accounting and
an experiment CLI.
"""

from .algorithms import Goal, UpdateOutcome, uniform_goal, weighted_goal
from .connectivity import ConditionReport, PathWitness, analyze, check_condition_c, check_svcc, check_svsc, find_path, partition_blocks
from .core import (
    CommSequence,
    ConfigurationError,
    InvalidInstanceError,
    KnowledgeSet,
    MalformedPayloadError,
    NormalEstimate,
    PositivityError,
    ProblemInstance,
    Signal,
    TraceError,
    UnsupportedGoalError,
    init_knowledge,
    make_instance,
    sequence_from_events,
)
from .generators import RandomProtocolConfig, SplitMix64, derive_stream, gen_double_cycle, gen_random_protocol
from .metrics import CostLedger, measure_costs, network_consensus_error, normal_error, table_bounds
from .sim import RunOptions, RunRecord, replay_check, run

__all__ = [
    "CommSequence", "ConditionReport", "ConfigurationError", "CostLedger", "Goal",
    "InvalidInstanceError", "KnowledgeSet", "MalformedPayloadError", "NormalEstimate",
    "PathWitness", "PositivityError", "ProblemInstance", "RandomProtocolConfig",
    "RunOptions", "RunRecord", "Signal", "SplitMix64", "TraceError", "UnsupportedGoalError",
    "UpdateOutcome", "analyze", "check_condition_c", "check_svcc", "check_svsc",
    "derive_stream", "find_path", "gen_double_cycle", "gen_random_protocol",
    "init_knowledge", "make_instance", "measure_costs", "network_consensus_error",
    "normal_error", "partition_blocks", "replay_check", "run", "sequence_from_events",
    "table_bounds", "uniform_goal", "weighted_goal",
]
