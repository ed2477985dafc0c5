"""
Replica network rules

r_lock   a replica about to query c2 conjoins c2 to its lock once every event
         it has not yet received is in transitive accord with c2
r_query  with a lock implying c2, the binder takes the evaluation of the local
         history (arbitration order, folded from s0)
r_emit   the effect is broadcast if permits(ls, e): it is in accord with the
         lock of every other replica; the emitter's lock is released
r_deliver an event whose dependencies were all received joins the local history
"""

from dataclasses import replace
from typing import Dict, List, Mapping, Optional, Set, Tuple

from core.card.semantics import denote_effect
from core.card.types import Card, EffectInstance, StoreValue
from core.exceptions import EvaluationError, SimulationError
from core.inference.accord import AccordReport, AccordTable, ia_report
from core.lambdaq.semantics import EmitPoint, QueryPoint, advance, resume
from core.lambdaq.syntax import OpDef
from core.logic.solvers import ValidityBackend
from core.logic.types import implies
from core.replica_sim.types import (
    ABORT,
    DELIVER,
    EMIT,
    LOCK,
    QUERY,
    Action,
    EventRecord,
    InProgress,
    Invocation,
    NetworkState,
    QueryRecord,
    ReplicaState,
    Scenario,
)
from shared.utils.logger import get_logger

logger = get_logger("replica_sim")


class SimContext:
    """
    Everything the rules consult but never change: the card, the operations,
    the accord table used by r_lock and permits, and the protocol flags.
    """

    def __init__(
        self,
        card: Card,
        ops: Mapping[str, OpDef],
        backend: ValidityBackend,
        locking: bool = True,
        ia_only: bool = False,
        s0: Optional[StoreValue] = None,
        max_iter: int = 10,
        backoff_base: int = 2,
        accords: Optional[AccordTable] = None,
    ):
        self.card = card
        self.ops = dict(ops)
        self.backend = backend
        self.locking = locking
        self.ia_only = ia_only
        self.s0 = s0 or card.init
        self.backoff_base = backoff_base
        self.accords = accords or AccordTable(card, backend, max_iter, ia_only=ia_only)
        self._implications: Dict[Tuple[Tuple[str, ...], Tuple[str, ...]], bool] = {}
        self._immediate: Dict[Tuple[str, ...], AccordReport] = {}

    @classmethod
    def for_scenario(
        cls,
        scenario: Scenario,
        card: Card,
        ops: Mapping[str, OpDef],
        backend: ValidityBackend,
        max_iter: int = 10,
        backoff_base: int = 2,
    ) -> "SimContext":
        s0 = card.init
        if scenario.init:
            s0 = StoreValue.of(card.schema, {**card.init.as_dict(), **dict(scenario.init)})
        return cls(
            card,
            ops,
            backend,
            locking=scenario.locking,
            ia_only=scenario.ia_only,
            s0=s0,
            max_iter=max_iter,
            backoff_base=backoff_base,
        )

    def lock_implies(self, lock: Tuple[str, ...], guards: Tuple[str, ...]) -> bool:
        """Whether the conjunction ``lock`` implies ``guards`` (cached)"""
        if set(guards) <= set(lock):
            return True
        if not lock:
            return False
        key = (lock, guards)
        if key not in self._implications:
            formula = implies(self.card.conjunction(lock).body, self.card.conjunction(guards).body)
            self._implications[key] = self.backend.check(formula).is_valid
        return self._implications[key]

    def immediate(self, guards: Tuple[str, ...]) -> AccordReport:
        """Immediate-accord report of a conjunction, the reference for carefulness"""
        key = tuple(guards)
        if key not in self._immediate:
            self._immediate[key] = ia_report(self.card, self.card.conjunction(key), self.backend)
        return self._immediate[key]

    def start(self, invocation: Invocation) -> InProgress:
        if invocation.op not in self.ops:
            raise SimulationError(f"unknown operation '{invocation.op}'")
        term = self.ops[invocation.op].apply(*invocation.args)
        return InProgress(invocation, advance(self.card, term))


# ---------------------------------------------------------------- state construction


def _start_next(ctx: SimContext, replica: ReplicaState) -> ReplicaState:
    if replica.current is not None or not replica.pending:
        return replica
    invocation = replica.pending[0]
    return replace(replica, pending=replica.pending[1:], current=ctx.start(invocation), lock=(), aborts=0)


def initial_state(ctx: SimContext, scenario: Scenario) -> NetworkState:
    replicas = tuple(
        _start_next(ctx, ReplicaState(script.name, rank, pending=script.invocations))
        for rank, script in enumerate(scenario.replicas)
    )
    return NetworkState((), replicas)


def local_value(ctx: SimContext, state: NetworkState, replica: ReplicaState) -> StoreValue:
    """eval of the replica's local history"""
    store = ctx.s0
    for event in state.ordered(replica.local):
        store = denote_effect(ctx.card, event.effect, store)
    return store


# ---------------------------------------------------------------- premises


def missing_events(state: NetworkState, replica: ReplicaState) -> List[EventRecord]:
    return [v for v in state.history if v.id not in replica.local]


def lock_enabled(
    ctx: SimContext, state: NetworkState, replica: ReplicaState, guards: Tuple[str, ...]
) -> bool:
    """h \\ h_r ⊆ TAS(c2)"""
    report = ctx.accords.report(guards)
    return all(report.permits(v.effect) for v in missing_events(state, replica))


def blockers(ctx: SimContext, state: NetworkState, replica_id: str, e: EffectInstance) -> List[str]:
    """Replicas whose lock does not permit ``e``"""
    if not ctx.locking:
        return []
    return [
        r.id for r in state.replicas
        if r.id != replica_id and r.lock and not ctx.accords.permits(r.lock, e)
    ]


def permits(ctx: SimContext, state: NetworkState, replica_id: str, e: EffectInstance) -> bool:
    """permits(ls \\ r, e)"""
    return not blockers(ctx, state, replica_id, e)


def deliverable(state: NetworkState, replica: ReplicaState) -> List[EventRecord]:
    return [v for v in state.ordered() if v.id not in replica.local and v.deps <= replica.local]


def wants_lock(ctx: SimContext, replica: ReplicaState) -> Optional[Tuple[str, ...]]:
    """Guards the replica must lock before its next query, if any"""
    if not ctx.locking or replica.current is None:
        return None
    point = replica.current.point
    if isinstance(point, QueryPoint) and not ctx.lock_implies(replica.lock, point.guards):
        return point.guards
    return None


# ---------------------------------------------------------------- rules


def step_lock(ctx: SimContext, state: NetworkState, replica_id: str, guards: Tuple[str, ...]) -> NetworkState:
    replica = state.replica(replica_id)
    if not lock_enabled(ctx, state, replica, guards):
        raise SimulationError(f"{replica_id} cannot lock {' && '.join(guards)} yet")
    lock = replica.lock + tuple(g for g in guards if g not in replica.lock)
    return state.with_replica(replace(replica, lock=lock))


def step_query(ctx: SimContext, state: NetworkState, replica_id: str) -> NetworkState:
    replica = state.replica(replica_id)
    current = replica.current
    if current is None or not isinstance(current.point, QueryPoint):
        raise SimulationError(f"{replica_id} is not at a query")
    point = current.point
    if ctx.locking and not ctx.lock_implies(replica.lock, point.guards):
        raise SimulationError(f"lock of {replica_id} does not imply {' && '.join(point.guards)}")
    value = local_value(ctx, state, replica)
    term, env = resume(point, value)
    try:
        following = advance(ctx.card, term, env)
    except EvaluationError as e:
        raise SimulationError(f"{replica_id} running {current.invocation}: {e.message}")
    record = QueryRecord(point.guards, replica.local, value)
    progressed = InProgress(current.invocation, following, current.queries + (record,))
    return state.with_replica(replace(replica, current=progressed))


def step_emit(ctx: SimContext, state: NetworkState, replica_id: str) -> Tuple[NetworkState, EventRecord]:
    replica = state.replica(replica_id)
    current = replica.current
    if current is None or not isinstance(current.point, EmitPoint):
        raise SimulationError(f"{replica_id} is not at an emit")
    point = current.point
    if not permits(ctx, state, replica_id, point.effect):
        raise SimulationError(f"{point.effect} from {replica_id} is not permitted by the locks")
    # above everything in the local history, and above any lamport a lock release announced
    events = state.events
    seen = [events[i].lamport for i in replica.local]
    lamport = 1 + max(seen + [replica.clock])
    event = EventRecord(
        lamport=lamport,
        replica=replica.id,
        rank=replica.rank,
        effect=point.effect,
        rval=point.rval,
        deps=replica.local,
        op=current.invocation.op,
        queries=current.queries,
    )
    # releasing the lock announces the new event, so no replica can later emit before it
    released = bool(replica.lock)
    emitter = replace(replica, local=replica.local | {event.id}, current=None, lock=(), clock=lamport)
    emitter = _start_next(ctx, emitter)
    replicas = []
    for r in state.replicas:
        if r.id == replica_id:
            replicas.append(emitter)
        elif released and r.clock < lamport:
            replicas.append(replace(r, clock=lamport))
        else:
            replicas.append(r)
    return NetworkState(state.history + (event,), tuple(replicas)), event


def step_deliver(ctx: SimContext, state: NetworkState, replica_id: str, event_id: str) -> NetworkState:
    replica = state.replica(replica_id)
    event = state.events.get(event_id)
    if event is None or event_id in replica.local:
        raise SimulationError(f"{event_id} cannot be delivered to {replica_id}")
    if not event.deps <= replica.local:
        raise SimulationError(f"{event_id} is not causally ready at {replica_id}")
    updated = replace(replica, local=replica.local | {event_id}, clock=max(replica.clock, event.lamport))
    return state.with_replica(updated)


def abort(ctx: SimContext, state: NetworkState, replica_id: str, step: int) -> NetworkState:
    """Drop the replica's lock and restart its current operation after a backoff"""
    replica = state.replica(replica_id)
    if replica.current is None:
        raise SimulationError(f"{replica_id} has no operation to abort")
    aborts = replica.aborts + 1
    restarted = replace(
        replica,
        current=ctx.start(replica.current.invocation),
        lock=(),
        aborts=aborts,
        backoff_until=step + ctx.backoff_base ** aborts,
    )
    logger.warning(
        f"deadlock: aborting {replica.current.invocation} on {replica_id} "
        f"(attempt {aborts}, backoff until step {restarted.backoff_until})"
    )
    return state.with_replica(restarted)


# ---------------------------------------------------------------- enabled instances


class Enabled:
    """Rule instances enabled in a state, plus the emits blocked by locks"""

    def __init__(self):
        self.actions: List[Action] = []
        self.blocked: Dict[str, List[str]] = {}
        self.waiting: List[str] = []

    def waits_for(self) -> Dict[str, Set[str]]:
        return {r: set(holders) for r, holders in self.blocked.items()}


def enabled_actions(ctx: SimContext, state: NetworkState, step: Optional[int] = None) -> Enabled:
    """
    Enabled rule instances in a fixed order: deliveries by replica and
    arbitration key, then each replica's own step. ``step`` enforces abort
    backoff; None ignores it.
    """
    enabled = Enabled()
    for replica in state.replicas:
        for event in deliverable(state, replica):
            enabled.actions.append(Action(DELIVER, replica.id, event.id, event=event.id))
    for replica in state.replicas:
        current = replica.current
        if current is None:
            continue
        if step is not None and step < replica.backoff_until:
            enabled.waiting.append(replica.id)
            continue
        point = current.point
        if isinstance(point, QueryPoint):
            needed = wants_lock(ctx, replica)
            if needed is not None:
                if lock_enabled(ctx, state, replica, needed):
                    enabled.actions.append(Action(LOCK, replica.id, " && ".join(needed), guards=needed))
            else:
                enabled.actions.append(
                    Action(QUERY, replica.id, " && ".join(point.guards), guards=point.guards)
                )
        else:
            holders = blockers(ctx, state, replica.id, point.effect)
            if holders:
                enabled.blocked[replica.id] = holders
            else:
                enabled.actions.append(Action(EMIT, replica.id, f"{current.invocation} {point.effect}"))
    return enabled


def deadlock_victim(enabled: Enabled, state: NetworkState) -> Optional[str]:
    """The highest-ranked replica on a waits-for cycle, or None"""
    graph = enabled.waits_for()
    ranks = {r.id: r.rank for r in state.replicas}

    def reaches(source: str, target: str) -> bool:
        seen: Set[str] = set()
        stack = list(graph.get(source, ()))
        while stack:
            node = stack.pop()
            if node == target:
                return True
            if node not in seen:
                seen.add(node)
                stack.extend(graph.get(node, ()))
        return False

    cyclic = [r for r in graph if reaches(r, r)]
    if not cyclic:
        return None
    return max(cyclic, key=lambda r: ranks[r])


def apply_action(
    ctx: SimContext, state: NetworkState, action: Action, step: int = 0
) -> Tuple[NetworkState, Optional[EventRecord]]:
    if action.rule == DELIVER:
        return step_deliver(ctx, state, action.replica, action.event), None
    if action.rule == LOCK:
        return step_lock(ctx, state, action.replica, action.guards), None
    if action.rule == QUERY:
        return step_query(ctx, state, action.replica), None
    if action.rule == EMIT:
        return step_emit(ctx, state, action.replica)
    if action.rule == ABORT:
        return abort(ctx, state, action.replica, step), None
    raise SimulationError(f"unknown rule {action.rule}")
