"""
Random small D-executions for property tests.
"""

import random
from typing import Optional, Sequence, Tuple

from core.card.semantics import denote_effect, guard_eval
from core.card.types import NOOP, TOP, Card, EffectClass, EffectInstance, StoreValue
from core.exceptions import CardkitError
from core.execution.checks import eval_execution, restrict
from core.execution.types import ActiveGuard, DExecution, Event
from core.logic.solvers import ordered_range


def random_instance(
    card: Card,
    rng: random.Random,
    param_domain: Tuple[int, int] = (-4, 4),
    effects: Optional[Sequence[EffectClass]] = None,
) -> EffectInstance:
    """Uniform effect class, arguments drawn until the constraint holds (NoOp as last resort)"""
    pool = list(effects or card.effects)
    rng.shuffle(pool)
    for effect in pool:
        for _ in range(20):
            args = []
            for param in effect.params:
                if param.sort.kind.value == "bool":
                    args.append(rng.random() < 0.5)
                else:
                    lo, hi = param.var.domain or param_domain
                    args.append(rng.choice(ordered_range(lo, hi)))
            try:
                return effect.instance(*args)
            except CardkitError:
                continue
    return card.effect(NOOP).instance()


def _closure(L_events: Sequence[Event], chosen: set) -> frozenset:
    """Close a visible set under the guards of the events it contains"""
    owners = {e.id: e for e in L_events}
    result = set(chosen)
    frontier = list(chosen)
    while frontier:
        seen = owners[frontier.pop()]
        for guard in seen.guards:
            for inner in guard.visible:
                if inner not in result:
                    result.add(inner)
                    frontier.append(inner)
    return frozenset(result)


def random_execution(
    card: Card,
    rng: random.Random,
    size: int = 4,
    s0: Optional[StoreValue] = None,
    guard_probability: float = 0.7,
    param_domain: Tuple[int, int] = (-4, 4),
    keep_failing: bool = False,
) -> DExecution:
    """
    A well-formed execution: visibility is drawn among earlier events and closed
    transitively; a drawn guard that would fail compliance is replaced by Top.

    With ``keep_failing`` the drawn guard is kept even when it fails, so the
    result may break guard compliance (visibility stays causal and transitive).
    """
    events = []
    initial = s0 or card.init
    store = initial
    guard_count = 0
    for index in range(size):
        instance = random_instance(card, rng, param_domain)
        guards = []
        if rng.random() < guard_probability:
            earlier = [e.id for e in events]
            chosen = {eid for eid in earlier if rng.random() < 0.5}
            visible = _closure(events, chosen)
            guard_name = rng.choice(card.guard_names)
            partial = DExecution(initial, tuple(events))
            vis_store = eval_execution(card, restrict(partial, visible))
            if not keep_failing and not guard_eval(card, card.guard(guard_name), store, vis_store):
                guard_name = TOP
            guards.append(ActiveGuard(f"g{guard_count}", (guard_name,), visible))
            guard_count += 1
        events.append(Event(f"e{index}", instance, 0, tuple(guards)))
        store = denote_effect(card, instance, store)
    return DExecution(initial, tuple(events))
