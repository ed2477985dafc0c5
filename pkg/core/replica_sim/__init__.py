"""
Seeded simulator of the replica network: locks driven by accord sets,
permitted emission, causal delivery, deadlock abort-retry and extraction of
the produced D-execution.
"""

from .extraction import (
    RunCheck,
    careful_accords,
    check_execution,
    converged,
    global_value,
    produced_execution,
    replica_values,
)
from .rules import (
    SimContext,
    abort,
    enabled_actions,
    initial_state,
    local_value,
    lock_enabled,
    permits,
    step_deliver,
    step_emit,
    step_lock,
    step_query,
)
from .scheduler import ExplorationResult, SimulationResult, explore, run
from .types import (
    Action,
    EventRecord,
    Invocation,
    NetworkState,
    QueryRecord,
    ReplicaScript,
    ReplicaState,
    Scenario,
    SimulationStats,
    TraceStep,
)
