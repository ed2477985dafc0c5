"""
Produced executions

Every emitted event becomes an event of the D-execution, in arbitration
order. Each query step of the operation that emitted it becomes an active
guard whose visible events are the local history at the time of the query.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from core.card.semantics import denote_effect
from core.card.types import StoreValue
from core.execution.checks import check_careful, check_well_formed, first_invariant_failure
from core.execution.types import ActiveGuard, DExecution, Event, Violation
from core.inference.accord import AccordReport
from core.logic.types import Formula
from core.replica_sim.rules import SimContext, local_value
from core.replica_sim.types import NetworkState


def produced_execution(ctx: SimContext, state: NetworkState) -> DExecution:
    events = []
    for record in state.ordered():
        guards = tuple(
            ActiveGuard(f"{record.id}/q{k}", query.guards, query.visible)
            for k, query in enumerate(record.queries)
        )
        events.append(Event(record.id, record.effect, record.rval, guards))
    return DExecution(ctx.s0, tuple(events))


def global_value(ctx: SimContext, state: NetworkState) -> StoreValue:
    """eval of the whole history"""
    store = ctx.s0
    for record in state.ordered():
        store = denote_effect(ctx.card, record.effect, store)
    return store


def replica_values(ctx: SimContext, state: NetworkState) -> Dict[str, StoreValue]:
    return {r.id: local_value(ctx, state, r) for r in state.replicas}


def converged(ctx: SimContext, state: NetworkState) -> bool:
    """Every replica's local evaluation equals the evaluation of the global history"""
    target = global_value(ctx, state)
    return all(value == target for value in replica_values(ctx, state).values())


@dataclass(frozen=True)
class RunCheck:
    """Checks of one produced execution"""
    well_formed: Tuple[Violation, ...] = ()
    careful: Tuple[Violation, ...] = ()
    invariant: Optional[Tuple[int, StoreValue]] = None
    converged: bool = True

    @property
    def ok(self) -> bool:
        return not self.well_formed and not self.careful and self.invariant is None and self.converged

    def failures(self) -> List[str]:
        messages = [str(v) for v in self.well_formed + self.careful]
        if self.invariant is not None:
            index, value = self.invariant
            messages.append(f"[invariant] fails after {index} events with value {value}")
        if not self.converged:
            messages.append("[sec] replicas disagree at quiescence")
        return messages


def careful_accords(ctx: SimContext, L: DExecution) -> Dict[str, AccordReport]:
    """Immediate-accord report of every guard conjunction active in ``L``"""
    return {g.name: ctx.immediate(g.guards) for event in L.events for g in event.guards}


def check_execution(
    ctx: SimContext,
    L: DExecution,
    invariant: Optional[Formula] = None,
    state: Optional[NetworkState] = None,
) -> RunCheck:
    """Well-formedness, carefulness, the invariant and, given a quiescent state, convergence"""
    return RunCheck(
        well_formed=tuple(check_well_formed(ctx.card, L)),
        careful=tuple(check_careful(ctx.card, L, careful_accords(ctx, L))),
        invariant=first_invariant_failure(ctx.card, L, invariant) if invariant is not None else None,
        converged=converged(ctx, state) if state is not None else True,
    )
