"""
Conflict inference

Immediate accords, weakest consistency preconditions and the transitive
accord fixed point. The fixed point strengthens a guard with the WCPs of all
effect classes until it becomes a consistency invariant, then reports the
effect classes in immediate accord with that invariant.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from core.card.types import NOOP, Card, EffectClass, EffectInstance, GuardDef
from core.logic.solvers import ValidityBackend
from core.logic.transform import Side, apply_effect, simplify, substitute
from core.logic.types import And, Formula, IntLit, TRUE, conj, forall, implies
from shared.utils.logger import get_logger

logger = get_logger("inference")

GuardLike = Union[GuardDef, Formula]


class AccordStatus(Enum):
    """How the accord set of a guard was obtained"""
    CONVERGED = "converged"
    FALLBACK_USED = "fallback"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class AccordReport:
    """Accord and conflict sets of one guard (or conjunction of guards)"""
    guard: str
    accord: Tuple[str, ...]
    conflict: Tuple[str, ...]
    invariant_used: Formula
    iterations: int
    status: AccordStatus
    immediate: Tuple[str, ...] = ()
    index_conflicts: Mapping[str, Mapping[str, FrozenSet[int]]] = field(default_factory=dict)
    elapsed_ms: float = 0.0

    def permits(self, e: EffectInstance) -> bool:
        """Whether an instance may be emitted while this guard is locked"""
        if e.name == NOOP:
            return True
        if self.status == AccordStatus.UNKNOWN:
            return False
        if e.name in self.accord:
            return True
        refined = self.index_conflicts.get(e.name)
        if not refined:
            return False
        bindings = e.bindings
        return any(bindings[param] not in values for param, values in refined.items())


def _body(c: GuardLike) -> Formula:
    return c.body if isinstance(c, GuardDef) else c


def _name(c: GuardLike) -> str:
    return c.name if isinstance(c, GuardDef) else str(c)


def ia_formula(c: Formula, e: EffectClass) -> Formula:
    """∀params. constraints ⇒ (c(g, r) ⇒ c(⟦e⟧(g), r))"""
    return forall(e.param_vars, implies(e.constraint, implies(c, apply_effect(c, e, Side.GLOBAL))))


def immediate_accord(
    card: Card, c: GuardLike, e: EffectClass, backend: ValidityBackend
) -> Optional[bool]:
    """
    Immediate accord between a guard and an effect class.

    Returns:
        True or False; None when the backend answered Unknown.
    """
    if e.name == NOOP:
        return True
    result = backend.check(ia_formula(_body(c), e))
    if result.is_unknown:
        logger.warning(f"immediate accord of {e.name} with {_name(c)} is unknown: {result.reason}")
        return None
    return result.is_valid


def wcp(card: Card, e: EffectClass, c: Formula) -> Formula:
    """∀params. constraints ⇒ c[⟦e⟧(g)/g, ⟦e⟧(r)/r]"""
    return forall(e.param_vars, implies(e.constraint, apply_effect(c, e, Side.BOTH)))


def _conjuncts(f: Formula) -> List[Formula]:
    if isinstance(f, And):
        return list(f.args)
    return [] if f == TRUE else [f]


def _index_conflicts(
    card: Card, invariant: Formula, e: EffectClass, backend: ValidityBackend
) -> Dict[str, FrozenSet[int]]:
    refined: Dict[str, FrozenSet[int]] = {}
    for param in e.index_params:
        conflicting = set()
        for value in range(param.index_bound):
            restricted = EffectClass(
                e.name,
                tuple(p for p in e.params if p.name != param.name),
                tuple((f, substitute(t, {param.name: IntLit(value)})) for f, t in e.updates),
            )
            constraint = substitute(param.constraint, {param.name: IntLit(value)})
            formula = forall(
                restricted.param_vars,
                implies(
                    conj(constraint, restricted.constraint),
                    implies(invariant, apply_effect(invariant, restricted, Side.GLOBAL)),
                ),
            )
            if not backend.check(simplify(formula)).is_valid:
                conflicting.add(value)
        if len(conflicting) < param.index_bound:
            refined[param.name] = frozenset(conflicting)
    return refined


def _classify(
    card: Card, invariant: Formula, backend: ValidityBackend, refine: bool = True
) -> Tuple[List[str], List[str], Dict[str, Dict[str, FrozenSet[int]]], bool]:
    accord, conflict = [], []
    refined: Dict[str, Dict[str, FrozenSet[int]]] = {}
    unknown = False
    for effect in card.effects:
        verdict = immediate_accord(card, invariant, effect, backend)
        if verdict is True:
            accord.append(effect.name)
            continue
        conflict.append(effect.name)
        if verdict is None:
            unknown = True
        elif refine and effect.index_params:
            per_param = _index_conflicts(card, invariant, effect, backend)
            if per_param:
                refined[effect.name] = per_param
    return accord, conflict, refined, unknown


def tas_fixed_point(
    card: Card,
    c: GuardLike,
    backend: ValidityBackend,
    max_iter: int = 10,
) -> AccordReport:
    """
    Transitive accord set of a guard.

    Iterates c_{i+1} = c_i ∧ ⋀_e wcp(e, c_i) until c_i ⇒ ⋀_e wcp(e, c_i) is
    valid, then classifies effects by immediate accord with c_i. Conjuncts
    already implied by c_i are not added, which keeps c_i equivalent to the
    plain iteration. After ``max_iter`` rounds the identity relation is
    conjoined instead (c ∧ EQ is always a consistency invariant).
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    started = time.perf_counter()
    name = _name(c)
    original = _body(c)
    conjuncts = _conjuncts(original)
    frontier = list(conjuncts)
    status = AccordStatus.FALLBACK_USED
    invariant = conj(original, card.guard("EQ").body)
    iterations = max_iter
    unknown = False

    for iteration in range(1, max_iter + 1):
        current = conj(*conjuncts)
        fresh: List[Formula] = []
        for effect in card.effects:
            for part in frontier:
                for piece in _conjuncts(simplify(wcp(card, effect, part))):
                    if piece in conjuncts or piece in fresh:
                        continue
                    fresh.append(piece)
        missing: List[Formula] = []
        for piece in fresh:
            result = backend.check(implies(current, piece))
            if result.is_unknown:
                unknown = True
                missing.append(piece)
            elif result.is_invalid:
                missing.append(piece)
        logger.debug(f"{name}: iteration {iteration}, {len(fresh)} wcp conjuncts, {len(missing)} not implied")
        if not missing and not unknown:
            status = AccordStatus.CONVERGED
            invariant = current
            iterations = iteration
            break
        if unknown:
            logger.warning(f"{name}: solver could not decide the fixed point, using c ∧ EQ")
            iterations = iteration
            break
        conjuncts.extend(missing)
        frontier = missing
    else:
        logger.warning(f"{name}: no consistency invariant within {max_iter} iterations, using c ∧ EQ")

    accord, conflict, refined, classify_unknown = _classify(card, invariant, backend)
    immediate, _, _, _ = _classify(card, original, backend, refine=False)
    if unknown or classify_unknown:
        status = AccordStatus.UNKNOWN

    elapsed = (time.perf_counter() - started) * 1000
    report = AccordReport(
        guard=name,
        accord=tuple(accord),
        conflict=tuple(conflict),
        invariant_used=invariant,
        iterations=iterations,
        status=status,
        immediate=tuple(immediate),
        index_conflicts=refined,
        elapsed_ms=elapsed,
    )
    logger.info(
        f"{card.name}/{name}: accord={{{', '.join(accord)}}} conflict={{{', '.join(conflict)}}} "
        f"status={status.value} iterations={iterations} ({elapsed:.0f} ms)"
    )
    return report


def ia_report(card: Card, c: GuardLike, backend: ValidityBackend) -> AccordReport:
    """Accord set by immediate accord alone (no fixed point)"""
    started = time.perf_counter()
    accord, conflict, refined, unknown = _classify(card, _body(c), backend)
    return AccordReport(
        guard=_name(c),
        accord=tuple(accord),
        conflict=tuple(conflict),
        invariant_used=_body(c),
        iterations=0,
        status=AccordStatus.UNKNOWN if unknown else AccordStatus.CONVERGED,
        immediate=tuple(accord),
        index_conflicts=refined,
        elapsed_ms=(time.perf_counter() - started) * 1000,
    )


def conflict_table(card: Card, backend: ValidityBackend, max_iter: int = 10) -> Dict[str, AccordReport]:
    """tas_fixed_point for every guard of the card, in declaration order"""
    return {guard.name: tas_fixed_point(card, guard, backend, max_iter) for guard in card.guards}


class AccordTable:
    """
    Accord reports of a card computed on demand, including conjunctions of
    named guards used by queries. ``ia_only`` switches to immediate accords.
    """

    def __init__(
        self,
        card: Card,
        backend: ValidityBackend,
        max_iter: int = 10,
        ia_only: bool = False,
        reports: Optional[Mapping[str, AccordReport]] = None,
    ):
        self.card = card
        self.backend = backend
        self.max_iter = max_iter
        self.ia_only = ia_only
        self._reports: Dict[Tuple[str, ...], AccordReport] = {}
        for guard_name, report in (reports or {}).items():
            self._reports[(guard_name,)] = report

    def report(self, guards: Sequence[str]) -> AccordReport:
        key = tuple(guards)
        if key not in self._reports:
            guard = self.card.conjunction(key)
            if self.ia_only:
                self._reports[key] = ia_report(self.card, guard, self.backend)
            else:
                self._reports[key] = tas_fixed_point(self.card, guard, self.backend, self.max_iter)
        return self._reports[key]

    def accord(self, guards: Sequence[str]) -> Tuple[str, ...]:
        return self.report(guards).accord

    def permits(self, guards: Sequence[str], e: EffectInstance) -> bool:
        return self.report(guards).permits(e)


def accord_for(
    card: Card, guards: Sequence[str], backend: ValidityBackend, max_iter: int = 10
) -> AccordReport:
    """Accord report of a conjunction of named guards"""
    return tas_fixed_point(card, card.conjunction(guards), backend, max_iter)
