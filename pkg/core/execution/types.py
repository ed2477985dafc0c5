"""
D-execution types

An execution L = (s0, W, G, grd, ar, vis) is materialized as the list of
events in arbitration order; each event owns its active guards, and each
active guard records the ids of the events it witnessed.
"""

from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterator, Optional, Tuple

from core.card.types import EffectInstance, StoreValue, render_value
from core.logic.types import Formula


@dataclass(frozen=True)
class ActiveGuard:
    """Guard instance attached to an event; ``visible`` is vis⁻¹(g)"""
    id: str
    guards: Tuple[str, ...]
    visible: FrozenSet[str] = frozenset()

    @property
    def name(self) -> str:
        return " && ".join(self.guards)


@dataclass(frozen=True)
class Event:
    """Event: effect instance, return value and owned active guards"""
    id: str
    effect: EffectInstance
    rval: Any = 0
    guards: Tuple[ActiveGuard, ...] = ()

    def __str__(self) -> str:
        return f"{self.id}:{self.effect}->{render_value(self.rval)}"


@dataclass(frozen=True)
class DExecution:
    """Events in arbitration order starting from s0"""
    s0: StoreValue
    events: Tuple[Event, ...] = ()

    def __post_init__(self):
        ids = [e.id for e in self.events]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate event ids in {ids}")
        guard_ids = [g.id for e in self.events for g in e.guards]
        if len(set(guard_ids)) != len(guard_ids):
            raise ValueError(f"duplicate active guard ids in {guard_ids}")

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    @property
    def event_ids(self) -> Tuple[str, ...]:
        return tuple(e.id for e in self.events)

    def position(self, event_id: str) -> int:
        for index, event in enumerate(self.events):
            if event.id == event_id:
                return index
        raise KeyError(f"unknown event '{event_id}'")

    def event(self, event_id: str) -> Event:
        return self.events[self.position(event_id)]

    def guard_table(self) -> Dict[str, Tuple[Event, ActiveGuard]]:
        """Active guard id → (owning event, guard)"""
        return {g.id: (e, g) for e in self.events for g in e.guards}

    def active_guard(self, guard_id: str) -> ActiveGuard:
        table = self.guard_table()
        if guard_id not in table:
            raise KeyError(f"unknown active guard '{guard_id}'")
        return table[guard_id][1]

    def owner(self, guard_id: str) -> Event:
        table = self.guard_table()
        if guard_id not in table:
            raise KeyError(f"unknown active guard '{guard_id}'")
        return table[guard_id][0]


@dataclass(frozen=True)
class EventSpec:
    """φ(s, s', a) over the pre store ``s``, post store ``s'`` and return value ``a``"""
    phi: Formula
    name: Optional[str] = None

    def __str__(self) -> str:
        return str(self.phi)


@dataclass(frozen=True)
class Violation:
    """A failed well-formedness or carefulness condition"""
    condition: str
    message: str
    witnesses: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"[{self.condition}] {self.message}"
