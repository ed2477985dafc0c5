"""
Concrete semantics of cards: effect denotations, guard evaluation,
load-time validation and effect composition.
"""

import random
from typing import List, Optional, Sequence, Tuple

from core.card.types import (
    Card,
    EffectClass,
    EffectInstance,
    GuardDef,
    Param,
    StoreValue,
    Value,
    value_conforms,
)
from core.exceptions import CardkitError
from core.logic.evaluate import Evaluator
from core.logic.solvers import ValidityBackend, ordered_range
from core.logic.transform import (
    check_sorts,
    free_vars,
    rename_store,
    sort_of,
    stores_of,
    substitute,
    substitute_fields,
)
from core.logic.types import GLOBAL, PRE, REPLICA, Field, Formula, Not, SortKind, Var
from shared.utils.logger import get_logger

logger = get_logger("card")


def _domain_for(var: Var) -> Sequence[Value]:
    if var.domain is not None:
        return ordered_range(*var.domain)
    from shared.config.settings import get_settings

    return ordered_range(*get_settings().param_domain)


def denote_effect(card: Card, e: EffectInstance, s: StoreValue) -> StoreValue:
    """
    ⟦e⟧(s): every field evaluated from its assignment under the old values.

    Raises:
        EvaluationError: out-of-bounds array index
    """
    evaluator = Evaluator({PRE: s.as_dict()}, e.bindings)
    updates = {name: evaluator.term(term) for name, term in e.effect.updates}
    return s.replace(**updates)


def holds(f: Formula, stores: dict, params: Optional[dict] = None) -> bool:
    """Concrete truth of a formula; quantifiers range over the configured parameter domain"""
    return Evaluator(stores, params, _domain_for).formula(f)


def guard_eval(card: Card, c: GuardDef, s_g: StoreValue, s_r: StoreValue) -> bool:
    """c(s_g, s_r)"""
    return holds(c.body, {GLOBAL: s_g.as_dict(), REPLICA: s_r.as_dict()})


def _reflexive_instance(body: Formula) -> Formula:
    return rename_store(body, REPLICA, GLOBAL)


def validate_card(card: Card, backend: ValidityBackend) -> List[str]:
    """
    Check reflexivity of every guard, satisfiability of every parameter
    constraint, well-sortedness of assignments and conformance of init.

    Returns:
        All violations found; empty when the card is valid.
    """
    violations: List[str] = []

    names = list(card.effect_names) + list(card.guard_names)
    duplicates = sorted({n for n in names if names.count(n) > 1})
    for name in duplicates:
        violations.append(f"name '{name}' is declared more than once")

    for name, sort in card.schema:
        try:
            value = card.init[name]
        except KeyError:
            violations.append(f"init lacks field '{name}'")
            continue
        if not value_conforms(value, sort):
            violations.append(f"init value of '{name}' does not conform to {sort}")

    for effect in card.effects:
        param_names = {p.name for p in effect.params}
        for field_name, term in effect.updates:
            if field_name not in card.schema:
                violations.append(f"effect {effect.name} assigns unknown field '{field_name}'")
                continue
            try:
                if sort_of(term) != card.schema.sort_of(field_name):
                    violations.append(f"effect {effect.name}: assignment to '{field_name}' is ill-sorted")
            except CardkitError as e:
                violations.append(f"effect {effect.name}: {e.message}")
            if stores_of(term) - {PRE}:
                violations.append(f"effect {effect.name}: assignment to '{field_name}' reads a foreign store")
            unknown = {v.name for v in free_vars(term)} - param_names
            if unknown:
                violations.append(f"effect {effect.name}: unbound names {sorted(unknown)}")
        constraint = effect.constraint
        if stores_of(constraint):
            violations.append(f"effect {effect.name}: parameter constraint mentions the store")
        elif effect.params:
            result = backend.check(Not(constraint))
            if result.is_valid:
                violations.append(f"effect {effect.name}: unsatisfiable parameter constraint")
            elif result.is_unknown:
                logger.warning(f"could not decide satisfiability of {effect.name}'s constraint")

    for guard in card.guards:
        try:
            check_sorts(guard.body)
        except CardkitError as e:
            violations.append(f"guard {guard.name}: {e.message}")
            continue
        if stores_of(guard.body) - {GLOBAL, REPLICA}:
            violations.append(f"guard {guard.name}: only g and r may be referenced")
            continue
        result = backend.check(_reflexive_instance(guard.body))
        if result.is_invalid:
            violations.append(f"guard {guard.name}: not reflexive (witness {result.witness})")
        elif result.is_unknown:
            violations.append(f"guard {guard.name}: reflexivity could not be established ({result.reason})")

    return violations


def compose_effects(name: str, first: EffectClass, second: EffectClass) -> EffectClass:
    """Sequential composition: apply ``first`` then ``second``"""
    taken = {p.name for p in first.params}
    renaming = {}
    params: List[Param] = list(first.params)
    for p in second.params:
        if p.name in taken:
            fresh = f"{p.name}_{len(taken)}"
            renaming[p.name] = Var(fresh, p.sort, p.var.domain)
            params.append(Param(fresh, p.sort, substitute(p.constraint, renaming), p.index_bound))
            taken.add(fresh)
        else:
            params.append(p)
            taken.add(p.name)
    first_map = {
        (PRE, fname): term for fname, term in first.updates
    }
    updates = dict(first.updates)
    for fname, term in second.updates:
        updates[fname] = substitute_fields(substitute(term, renaming), first_map)
    return EffectClass(name, tuple(params), tuple(updates.items()))


def random_store(card: Card, rng: random.Random, int_domain: Tuple[int, int] = (-8, 8)) -> StoreValue:
    """Uniform store value over the enumeration domain"""

    def value(sort) -> Value:
        if sort.kind == SortKind.BOOL:
            return rng.random() < 0.5
        if sort.kind == SortKind.INT:
            return rng.randint(*int_domain)
        return tuple(value(sort.element) for _ in range(sort.length or 0))

    return StoreValue(tuple((name, value(sort)) for name, sort in card.schema))


def store_field(card: Card, store: str, name: str) -> Field:
    return Field(store, name, card.schema.sort_of(name))
