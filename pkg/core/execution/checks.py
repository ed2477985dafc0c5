"""
Operations on D-executions: evaluation, sub-executions, well-formedness,
carefulness, event specifications and invariants.
"""

from typing import Any, Iterable, List, Mapping, Set

from core.card.semantics import denote_effect, guard_eval, holds
from core.card.types import Card, StoreValue
from core.exceptions import SortError
from core.execution.types import ActiveGuard, DExecution, Event, EventSpec, Violation
from core.logic.transform import free_vars
from core.logic.types import POST, PRE, Formula

RVAL = "a"

CAUSAL = "1:causal"
GUARD_COMPLIANCE = "2:guard-compliance"
TRANSITIVITY = "3:transitivity"
CAREFUL = "careful"


def eval_execution(card: Card, L: DExecution) -> StoreValue:
    """Left fold of the effect denotations in arbitration order"""
    store = L.s0
    for event in L.events:
        store = denote_effect(card, event.effect, store)
    return store


def prefix_values(card: Card, L: DExecution) -> List[StoreValue]:
    """Store after each prefix, starting with s0"""
    values = [L.s0]
    for event in L.events:
        values.append(denote_effect(card, event.effect, values[-1]))
    return values


def restrict(L: DExecution, event_ids: Iterable[str]) -> DExecution:
    """Sub-execution on the given events; retained events keep all their active guards"""
    keep = set(event_ids)
    events = []
    for event in L.events:
        if event.id not in keep:
            continue
        guards = tuple(
            ActiveGuard(g.id, g.guards, frozenset(v for v in g.visible if v in keep))
            for g in event.guards
        )
        events.append(Event(event.id, event.effect, event.rval, guards))
    return DExecution(L.s0, tuple(events))


def pre_execution(L: DExecution, event_id: str) -> DExecution:
    """Sub-execution of the events arbitrated before ``event_id``"""
    position = L.position(event_id)
    return restrict(L, L.event_ids[:position])


def vis_execution(L: DExecution, guard_id: str) -> DExecution:
    """Sub-execution of exactly the events witnessed by the active guard"""
    guard = L.active_guard(guard_id)
    return restrict(L, guard.visible)


def _guard_holds(card: Card, guard: ActiveGuard, pre: StoreValue, vis: StoreValue) -> bool:
    return guard_eval(card, card.conjunction(guard.guards), pre, vis)


def check_well_formed(card: Card, L: DExecution) -> List[Violation]:
    """
    The three well-formedness conditions, checked by direct enumeration.

    Returns:
        Violations tagged with the condition they break; empty when well-formed.
    """
    violations: List[Violation] = []
    positions = {e.id: i for i, e in enumerate(L.events)}
    values = prefix_values(card, L)

    for index, event in enumerate(L.events):
        for guard in event.guards:
            for seen in sorted(guard.visible):
                if seen not in positions:
                    violations.append(
                        Violation(CAUSAL, f"{guard.id} sees unknown event {seen}", (guard.id, seen))
                    )
                elif positions[seen] >= index:
                    violations.append(Violation(
                        CAUSAL,
                        f"{guard.id} of {event.id} sees {seen}, which is not arbitrated before it",
                        (event.id, guard.id, seen),
                    ))

    for index, event in enumerate(L.events):
        for guard in event.guards:
            vis_store = eval_execution(card, vis_execution(L, guard.id))
            if not _guard_holds(card, guard, values[index], vis_store):
                violations.append(Violation(
                    GUARD_COMPLIANCE,
                    f"{guard.name} of {event.id} fails: pre-store {values[index]}, vis-store {vis_store}",
                    (event.id, guard.id),
                ))

    owners = {e.id: e for e in L.events}
    for event in L.events:
        for guard in event.guards:
            for seen in sorted(guard.visible):
                if seen not in owners:
                    continue
                for inner in owners[seen].guards:
                    missing = sorted(inner.visible - guard.visible)
                    for lost in missing:
                        violations.append(Violation(
                            TRANSITIVITY,
                            f"{guard.id} sees {seen} whose {inner.id} sees {lost}, but {guard.id} does not",
                            (guard.id, seen, inner.id, lost),
                        ))
    return violations


def check_careful(card: Card, L: DExecution, accords: Mapping[str, Any]) -> List[Violation]:
    """
    Every event before an active guard's owner whose effect class is not in
    immediate accord with the guard must be visible to it.

    Args:
        accords: guard name (conjunctions joined by " && ") → accord set, or
            an accord report whose ``permits`` also honours index refinements
    """
    violations: List[Violation] = []
    for index, event in enumerate(L.events):
        for guard in event.guards:
            accord = accords.get(guard.name, ())
            if hasattr(accord, "permits"):
                allowed = accord.permits
            else:
                names: Set[str] = set(accord)
                allowed = lambda e, names=names: e.name in names  # noqa: E731
            for earlier in L.events[:index]:
                if earlier.id in guard.visible or allowed(earlier.effect):
                    continue
                violations.append(Violation(
                    CAREFUL,
                    f"{guard.name} of {event.id} does not see conflicting {earlier.id} ({earlier.effect})",
                    (event.id, guard.id, earlier.id),
                ))
    return violations


def _spec_stores(pre: StoreValue, post: StoreValue) -> dict:
    return {PRE: pre.as_dict(), POST: post.as_dict()}


def event_satisfies(card: Card, L: DExecution, event_id: str, spec: EventSpec) -> bool:
    """η ⊨_L φ with s = pre-store, s' = post-store and a = rval"""
    event = L.event(event_id)
    pre = eval_execution(card, pre_execution(L, event_id))
    post = denote_effect(card, event.effect, pre)
    params = {}
    for var in free_vars(spec.phi):
        if var.name != RVAL:
            raise SortError(f"event specification mentions unknown name '{var.name}'", name=var.name)
        if isinstance(event.rval, bool) != (var.sort.kind.value == "bool"):
            raise SortError(
                "return value does not match the sort of 'a'", name=RVAL, expected=var.sort, actual=event.rval
            )
        params[RVAL] = event.rval
    return holds(spec.phi, _spec_stores(pre, post), params)


def check_invariant(card: Card, L: DExecution, invariant: Formula) -> bool:
    """I holds at every prefix evaluation of L"""
    return all(holds(invariant, {PRE: value.as_dict()}) for value in prefix_values(card, L))


def first_invariant_failure(card: Card, L: DExecution, invariant: Formula):
    """Index and store of the first prefix violating I, or None"""
    for index, value in enumerate(prefix_values(card, L)):
        if not holds(invariant, {PRE: value.as_dict()}):
            return index, value
    return None
