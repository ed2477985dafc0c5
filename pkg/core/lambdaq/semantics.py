"""
Operation execution

Replays the nondeterministic operation rules under an explicit schedule: DRIFT
applies an effect to the global store (premise: ψ still holds afterwards) and
QUERY binds the binder to a chosen store value s_x (premise: c(s, s_x)) and
conjoins c[s_x/r] to ψ. Pure reductions in between are deterministic.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

from core.card.semantics import denote_effect, guard_eval, holds
from core.card.types import Card, EffectInstance, StoreValue
from core.exceptions import CardkitError, EvaluationError, ScheduleError
from core.lambdaq.evaluator import apply_closure, eval_pure
from core.lambdaq.syntax import (
    App,
    EffectCtor,
    EffectValue,
    LConst,
    LIte,
    LqTerm,
    OpExecState,
    Query,
    ReturnEmit,
)
from core.logic.transform import instantiate_store, simplify
from core.logic.types import GLOBAL, REPLICA, TRUE, Formula, conj
from shared.utils.logger import get_logger

logger = get_logger("lambdaq")

DRIFT = "DRIFT"
QUERY = "QUERY"


@dataclass(frozen=True)
class QueryPoint:
    """The term has reduced to ``query guards as binder in body``"""
    guards: Tuple[str, ...]
    binder: str
    body: LqTerm
    env: Tuple[Tuple[str, Any], ...]


@dataclass(frozen=True)
class EmitPoint:
    """The term has reduced to an emit of a concrete instance and value"""
    effect: EffectInstance
    rval: Any


Point = Union[QueryPoint, EmitPoint]


def advance(card: Card, term: LqTerm, env: Optional[Dict[str, Any]] = None) -> Point:
    """
    Reduce an operation term until it reaches a query or an emit.

    Raises:
        EvaluationError: stuck term, or emitted arguments violating the effect's constraint
    """
    env = dict(env or {})
    while True:
        if isinstance(term, App):
            fn = eval_pure(term.fn, env)
            args = [eval_pure(a, env) for a in term.args]
            body, inner = apply_closure(fn, args[0])
            for arg in args[1:]:
                body, inner = apply_closure(eval_pure(body, inner), arg)
            term, env = body, inner
        elif isinstance(term, LIte):
            cond = eval_pure(term.cond, env)
            if not isinstance(cond, bool):
                raise EvaluationError(f"condition {term.cond} is not boolean")
            term = term.then if cond else term.orelse
        elif isinstance(term, Query):
            return QueryPoint(term.guards, term.binder, term.body, tuple(env.items()))
        elif isinstance(term, ReturnEmit):
            value = eval_pure(term.effect, env)
            if not isinstance(value, EffectValue):
                raise EvaluationError(f"emit of a non-effect {value!r}")
            try:
                instance = card.instance(value.name, *value.args)
            except KeyError as e:
                raise EvaluationError(str(e))
            except CardkitError as e:
                raise EvaluationError(f"emitted {value}: {e.message}")
            return EmitPoint(instance, eval_pure(term.ret, env))
        else:
            raise EvaluationError(f"not an operation term: {term}")


def resume(point: QueryPoint, s_x: StoreValue) -> Tuple[LqTerm, Dict[str, Any]]:
    """Continue after a query with the binder bound to ``s_x``"""
    env = dict(point.env)
    env[point.binder] = s_x
    return point.body, env


def as_store(card: Card, value: Any) -> StoreValue:
    """Accept a bare value for single-field cards"""
    if isinstance(value, StoreValue):
        return value
    if card.schema.single:
        return StoreValue.of(card.schema, {card.schema.names[0]: value})
    if isinstance(value, dict):
        return StoreValue.of(card.schema, value)
    raise ScheduleError(f"{value!r} is not a store value of {card.name}", rule=QUERY)


def query_clause(card: Card, guards: Sequence[str], s_x: StoreValue) -> Formula:
    """c with the replica side fixed to s_x; the global side stays symbolic"""
    body = card.conjunction(tuple(guards)).body
    return simplify(instantiate_store(body, REPLICA, s_x.literals()))


def emitted_term(point: EmitPoint) -> ReturnEmit:
    ctor = EffectCtor(point.effect.name, tuple(LConst(a) for a in point.effect.args))
    return ReturnEmit(ctor, LConst(point.rval))


class _Replay:
    def __init__(self, card: Card, s: StoreValue, drifts, choices):
        self.card = card
        self.s = s
        self.psi: Formula = TRUE
        self.drifts = list(drifts)
        self.applied = []
        self.choices = None if choices is None else list(choices)
        self.clauses = []

    def drift(self) -> None:
        if not self.drifts:
            raise ScheduleError("drift schedule exhausted", rule=DRIFT)
        effect = self.drifts.pop(0)
        if not isinstance(effect, EffectInstance):
            raise ScheduleError(f"drift {effect!r} is not an effect instance", rule=DRIFT)
        after = denote_effect(self.card, effect, self.s)
        if not holds(self.psi, {GLOBAL: after.as_dict()}):
            raise ScheduleError(
                f"drift {effect} leads to {after}, which violates {self.psi}", rule=DRIFT
            )
        logger.debug(f"DRIFT {effect}: {self.s} -> {after}")
        self.s = after
        self.applied.append(effect)

    def query(self, point: QueryPoint):
        if self.choices is None:
            s_x = self.s
        elif not self.choices:
            raise ScheduleError("query choices exhausted mid-term", rule=QUERY)
        else:
            s_x = as_store(self.card, self.choices.pop(0))
        guard = self.card.conjunction(point.guards)
        if not guard_eval(self.card, guard, self.s, s_x):
            raise ScheduleError(f"{guard.name}({self.s}, {s_x}) does not hold", rule=QUERY)
        clause = query_clause(self.card, point.guards, s_x)
        self.psi = conj(self.psi, clause)
        self.clauses.append((point.guards, s_x))
        logger.debug(f"QUERY {guard.name} at {self.s} binds {point.binder} = {s_x}")
        term, env = resume(point, s_x)
        return advance(self.card, term, env)


def op_execute(
    card: Card,
    term: LqTerm,
    drift_schedule: Sequence[EffectInstance] = (),
    query_choices: Optional[Sequence[Any]] = None,
    order: Optional[str] = None,
    s0: Optional[StoreValue] = None,
) -> OpExecState:
    """
    Deterministic replay of one operation invocation.

    Args:
        drift_schedule: effects applied to the global store by DRIFT steps
        query_choices: store values bound by successive QUERY steps; None binds
            the current global store (always allowed, guards are reflexive)
        order: interleaving over ``D`` and ``Q``; by default every drift comes
            before the first query. Drifts left after the order are applied last.

    Returns:
        the final state (s, ψ, R.(e, a))

    Raises:
        ScheduleError: a premise failed or the schedule ran out; ``details.rule`` names the rule
    """
    replay = _Replay(card, s0 or card.init, drift_schedule, query_choices)
    point = advance(card, term)
    if order is None:
        order = "D" * len(replay.drifts)
    for step in order:
        if step == "D":
            replay.drift()
        elif step == "Q":
            if not isinstance(point, QueryPoint):
                raise ScheduleError(
                    "order asks for a query, but the operation has reached its emit", rule=QUERY
                )
            point = replay.query(point)
        else:
            raise ValueError(f"unknown schedule step '{step}' (expected D or Q)")
    while isinstance(point, QueryPoint):
        point = replay.query(point)
    while replay.drifts:
        replay.drift()

    return OpExecState(
        s=replay.s,
        psi=replay.psi,
        term=emitted_term(point),
        clauses=tuple(replay.clauses),
        drifts=tuple(replay.applied),
        effect=point.effect,
        rval=point.rval,
    )
