"""
Replica network state

The network is (h ‖ ls ‖ rs): the global history of emitted events, the lock
held by each replica, and the replica states with their local histories and
pending operation invocations. All states are immutable so that exploration
can hash and revisit them.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, FrozenSet, Iterator, Mapping, Optional, Tuple, Union

from core.card.types import EffectInstance, StoreValue, render_value
from core.lambdaq.semantics import EmitPoint, QueryPoint
from core.logic.types import Formula

Value = Any
EventKey = Tuple[int, int]

LOCK = "LOCK"
QUERY = "QUERY"
EMIT = "EMIT"
DELIVER = "DELIVER"
ABORT = "ABORT"
IDLE = "IDLE"

RANDOM = "random"
ORDERED = "ordered"


# ---------------------------------------------------------------- scenarios


@dataclass(frozen=True)
class Invocation:
    """One call of a named operation with concrete arguments"""
    op: str
    args: Tuple[Value, ...] = ()

    def __str__(self) -> str:
        return f"{self.op}({', '.join(render_value(a) for a in self.args)})"


@dataclass(frozen=True)
class ReplicaScript:
    name: str
    invocations: Tuple[Invocation, ...] = ()


@dataclass(frozen=True)
class Scenario:
    """
    A simulation input: the card and operations files, per-replica programs,
    scheduler seed and protocol flags.

    ``init`` overrides fields of the card's initial store; ``invariant`` is a
    formula over ``s`` checked at every prefix of the produced execution.
    """
    name: str
    card: str
    ops: str
    replicas: Tuple[ReplicaScript, ...] = ()
    init: Tuple[Tuple[str, Value], ...] = ()
    invariant: Optional[Formula] = None
    seed: int = 0
    locking: bool = True
    ia_only: bool = False
    policy: str = RANDOM

    @property
    def replica_names(self) -> Tuple[str, ...]:
        return tuple(r.name for r in self.replicas)

    def with_flags(self, **updates: Any) -> "Scenario":
        return replace(self, **{k: v for k, v in updates.items() if v is not None})


# ---------------------------------------------------------------- events


@dataclass(frozen=True)
class QueryRecord:
    """A query step: the guards it read and the events in the local history at that time"""
    guards: Tuple[str, ...]
    visible: FrozenSet[str]
    value: StoreValue


@dataclass(frozen=True)
class EventRecord:
    """
    v = event(r, e, a, h_r). Arbitration orders events by (lamport, rank),
    where rank is the replica's position in the scenario.
    """
    lamport: int
    replica: str
    rank: int
    effect: EffectInstance
    rval: Value
    deps: FrozenSet[str] = frozenset()
    op: str = ""
    queries: Tuple[QueryRecord, ...] = ()

    @property
    def id(self) -> str:
        return f"{self.replica}@{self.lamport}"

    @property
    def key(self) -> EventKey:
        return (self.lamport, self.rank)

    def __str__(self) -> str:
        return f"{self.id}:{self.effect}->{render_value(self.rval)}"


# ---------------------------------------------------------------- replicas


@dataclass(frozen=True)
class InProgress:
    """The operation a replica is currently running, stopped at a query or an emit"""
    invocation: Invocation
    point: Union[QueryPoint, EmitPoint]
    queries: Tuple[QueryRecord, ...] = ()


@dataclass(frozen=True)
class ReplicaState:
    """(r, h_r, ts) plus the lock ls(r), the Lamport clock and the abort backoff"""
    id: str
    rank: int
    local: FrozenSet[str] = frozenset()
    pending: Tuple[Invocation, ...] = ()
    current: Optional[InProgress] = None
    lock: Tuple[str, ...] = ()
    clock: int = 0
    aborts: int = 0
    backoff_until: int = 0

    @property
    def idle(self) -> bool:
        return self.current is None and not self.pending


@dataclass(frozen=True)
class NetworkState:
    history: Tuple[EventRecord, ...] = ()
    replicas: Tuple[ReplicaState, ...] = ()

    @property
    def events(self) -> Dict[str, EventRecord]:
        return {v.id: v for v in self.history}

    @property
    def locks(self) -> Dict[str, Tuple[str, ...]]:
        return {r.id: r.lock for r in self.replicas if r.lock}

    def replica(self, replica_id: str) -> ReplicaState:
        for r in self.replicas:
            if r.id == replica_id:
                return r
        raise KeyError(f"unknown replica '{replica_id}'")

    def with_replica(self, updated: ReplicaState) -> "NetworkState":
        return replace(
            self, replicas=tuple(updated if r.id == updated.id else r for r in self.replicas)
        )

    def ordered(self, ids: Optional[FrozenSet[str]] = None) -> Iterator[EventRecord]:
        """Events in arbitration order, optionally restricted to ``ids``"""
        chosen = self.history if ids is None else [v for v in self.history if v.id in ids]
        return iter(sorted(chosen, key=lambda v: v.key))

    @property
    def quiescent(self) -> bool:
        everything = frozenset(v.id for v in self.history)
        return all(r.idle and r.local == everything for r in self.replicas)


# ---------------------------------------------------------------- rule instances


@dataclass(frozen=True)
class Action:
    """An enabled rule instance"""
    rule: str
    replica: str
    detail: str = ""
    event: Optional[str] = None
    guards: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.rule} {self.replica} {self.detail}".rstrip()


@dataclass(frozen=True)
class TraceStep:
    number: int
    action: Action

    def __str__(self) -> str:
        return f"STEP {self.number} {self.action}"


@dataclass
class SimulationStats:
    """Counters collected over one run"""
    steps: int = 0
    emits: int = 0
    deliveries: int = 0
    locks_by_op: Dict[str, int] = field(default_factory=dict)
    lock_blocked_emits: int = 0
    aborts: int = 0

    @property
    def lock_acquisitions(self) -> int:
        return sum(self.locks_by_op.values())

    def count_lock(self, op: str) -> None:
        self.locks_by_op[op] = self.locks_by_op.get(op, 0) + 1

    def as_items(self) -> Mapping[str, Value]:
        items: Dict[str, Value] = {
            "steps": self.steps,
            "emits": self.emits,
            "deliveries": self.deliveries,
            "lock_acquisitions": self.lock_acquisitions,
            "lock_blocked_emits": self.lock_blocked_emits,
            "aborts": self.aborts,
        }
        for op in sorted(self.locks_by_op):
            items[f"locks.{op}"] = self.locks_by_op[op]
        return items
