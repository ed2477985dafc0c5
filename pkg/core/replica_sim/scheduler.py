"""
Schedulers over the replica rules

``run`` fires one enabled rule instance per step, picked by a seeded PRNG
(or the first one under the ordered policy), until quiescence. A state where
nothing is enabled but replicas wait on each other's locks is a deadlock;
the highest-ranked replica on the waits-for cycle aborts and retries after
an exponential backoff. ``explore`` enumerates every interleaving up to a
depth bound instead.
"""

import random
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Set, Tuple

from core.exceptions import NonQuiescenceError, ScheduleError, SimulationError
from core.execution.types import DExecution
from core.replica_sim.extraction import converged, produced_execution
from core.replica_sim.rules import SimContext, apply_action, deadlock_victim, enabled_actions, initial_state
from core.replica_sim.types import (
    ABORT,
    EMIT,
    IDLE,
    LOCK,
    ORDERED,
    DELIVER,
    Action,
    NetworkState,
    Scenario,
    SimulationStats,
    TraceStep,
)
from shared.utils.logger import get_logger

logger = get_logger("replica_sim")


@dataclass
class SimulationResult:
    scenario: Scenario
    seed: int
    state: NetworkState
    execution: DExecution
    trace: List[TraceStep] = field(default_factory=list)
    stats: SimulationStats = field(default_factory=SimulationStats)
    converged: bool = True

    def trace_lines(self) -> List[str]:
        return [str(step) for step in self.trace]


def _op_of(state: NetworkState, replica_id: str) -> str:
    current = state.replica(replica_id).current
    return current.invocation.op if current is not None else ""


def _blocked_key(state: NetworkState, replica_id: str) -> Tuple[str, int, int]:
    """One key per pending emit: its replica, the events it emitted so far, its abort count"""
    emitted = sum(1 for v in state.history if v.replica == replica_id)
    return replica_id, emitted, state.replica(replica_id).aborts


def run(
    ctx: SimContext,
    scenario: Scenario,
    seed: Optional[int] = None,
    max_steps: int = 5000,
    script: Sequence[str] = (),
) -> SimulationResult:
    """
    Simulate the scenario to quiescence.

    Args:
        seed: PRNG seed (defaults to the scenario's)
        script: rule instances fired first, each given as a prefix of its trace
            text such as ``"EMIT r1"`` or ``"DELIVER r2 r1@1"``

    Raises:
        NonQuiescenceError: not quiescent after ``max_steps`` steps
        ScheduleError: a scripted step matches no enabled instance
    """
    seed = scenario.seed if seed is None else seed
    rng = random.Random(seed)
    state = initial_state(ctx, scenario)
    stats = SimulationStats()
    trace: List[TraceStep] = []
    pending_script = list(script)
    blocked_seen: Set[Tuple[str, int, int]] = set()
    step = 0

    while not state.quiescent:
        if step >= max_steps:
            raise NonQuiescenceError(
                f"{scenario.name} is not quiescent after {max_steps} steps (seed {seed})",
                max_steps=max_steps,
            )
        enabled = enabled_actions(ctx, state, step)
        for replica_id in enabled.blocked:
            key = _blocked_key(state, replica_id)
            if key not in blocked_seen:
                blocked_seen.add(key)
                stats.lock_blocked_emits += 1
        if pending_script:
            wanted = pending_script.pop(0)
            matches = [a for a in enabled.actions if str(a).startswith(wanted)]
            if not matches:
                raise ScheduleError(
                    f"scripted step '{wanted}' is not enabled; enabled: {[str(a) for a in enabled.actions]}",
                    rule=wanted,
                )
            action = matches[0]
        elif enabled.actions:
            action = enabled.actions[0] if scenario.policy == ORDERED else rng.choice(enabled.actions)
        elif enabled.waiting:
            resume_at = min(state.replica(r).backoff_until for r in enabled.waiting)
            trace.append(TraceStep(step, Action(IDLE, "-", f"until {resume_at}")))
            step = max(step + 1, resume_at)
            continue
        else:
            victim = deadlock_victim(enabled, state)
            if victim is None:
                raise SimulationError(f"{scenario.name}: stuck without a waits-for cycle (seed {seed})")
            action = Action(ABORT, victim, str(state.replica(victim).current.invocation))
            stats.aborts += 1

        if action.rule == LOCK:
            stats.count_lock(_op_of(state, action.replica))
        state, event = apply_action(ctx, state, action, step)
        if action.rule == EMIT:
            stats.emits += 1
        elif action.rule == DELIVER:
            stats.deliveries += 1
        trace.append(TraceStep(step, action))
        logger.debug(f"STEP {step} {action}")
        step += 1

    stats.steps = step
    result = SimulationResult(
        scenario=scenario,
        seed=seed,
        state=state,
        execution=produced_execution(ctx, state),
        trace=trace,
        stats=stats,
        converged=converged(ctx, state),
    )
    logger.info(
        f"{scenario.name} seed {seed}: {len(state.history)} events in {step} steps, "
        f"{stats.lock_acquisitions} locks, {stats.aborts} aborts"
    )
    return result


@dataclass
class ExplorationResult:
    """Executions produced at every quiescent or depth-bounded leaf"""
    leaves: List[Tuple[Tuple[Action, ...], DExecution]] = field(default_factory=list)
    states: int = 0
    truncated: int = 0

    @property
    def executions(self) -> List[DExecution]:
        return [execution for _, execution in self.leaves]


def explore(ctx: SimContext, scenario: Scenario, depth: int = 12) -> ExplorationResult:
    """
    Bounded exhaustive exploration of rule interleavings (depth-first, states
    deduplicated). Deadlocks are resolved by the same abort as ``run``,
    without backoff.
    """
    result = ExplorationResult()
    visited: Set[NetworkState] = set()
    stack: List[Tuple[NetworkState, Tuple[Action, ...]]] = [(initial_state(ctx, scenario), ())]

    while stack:
        state, path = stack.pop()
        if state in visited:
            continue
        visited.add(state)
        result.states += 1
        if state.quiescent or len(path) >= depth:
            if not state.quiescent:
                result.truncated += 1
            result.leaves.append((path, produced_execution(ctx, state)))
            continue
        enabled = enabled_actions(ctx, state)
        actions = list(enabled.actions)
        if not actions:
            victim = deadlock_victim(enabled, state)
            if victim is None:
                raise SimulationError(f"{scenario.name}: stuck without a waits-for cycle during exploration")
            actions = [Action(ABORT, victim, str(state.replica(victim).current.invocation))]
        for action in reversed(actions):
            successor, _ = apply_action(ctx, state, action)
            stack.append((successor, path + (action,)))

    logger.info(
        f"{scenario.name}: explored {result.states} states, {len(result.leaves)} leaves "
        f"({result.truncated} at the depth bound)"
    )
    return result
