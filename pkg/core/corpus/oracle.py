"""
Bounded accord oracle

Classifies each effect class of a card against a guard by brute force.
Immediate accord, which decides the events a guard may miss, is checked by
bounded enumeration as well, so no SMT solver is consulted. Small executions
are built from the card's initial store: a prefix of up to ``max_prefix``
unguarded events, then an observer event ``eta`` carrying the guard. Prefix
events outside the guard's immediate accord must be visible to it
(carefulness). An effect class conflicts when inserting one invisible instance
of it somewhere before ``eta`` turns a compliant guard into a violated one; the
execution with the inserted event is kept as the witness.
"""

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from core.card.semantics import denote_effect, guard_eval
from core.card.types import NOOP, Card, EffectClass, EffectInstance, GuardDef, StoreValue
from core.corpus.fixtures import BUDGET, EXHAUSTIVE, INSERTED, OBSERVER, Fixture, GuardFixture, Witness
from core.corpus.registry import BENCHMARK_APPLICATIONS, FIXTURE_DIR, FIXTURE_SUFFIX, Corpus
from core.exceptions import CardkitError
from core.execution.checks import GUARD_COMPLIANCE, check_well_formed, restrict
from core.execution.types import ActiveGuard, DExecution, Event
from core.inference.accord import ia_report
from core.logic.solvers import EnumerationSolver, make_backend
from core.logic.types import SortKind
from shared.utils.logger import get_logger

logger = get_logger("oracle")

ORACLE_INTS = (-1, 0, 1, 2)
PREFIX_INDICES = (0, 1)


def instances(
    effect: EffectClass, ints: Sequence[int] = ORACLE_INTS, index_pool: Optional[Sequence[int]] = None
) -> List[EffectInstance]:
    """Every instance of the class over the small domain that satisfies its constraint"""
    axes = []
    for param in effect.params:
        if param.index_bound is not None:
            pool = range(param.index_bound) if index_pool is None else index_pool
            axes.append([v for v in pool if v < param.index_bound])
        elif param.sort.kind == SortKind.BOOL:
            axes.append([False, True])
        else:
            axes.append(list(ints))
    result = []
    for args in itertools.product(*axes):
        try:
            result.append(effect.instance(*args))
        except CardkitError:
            continue
    return result


def _fold(card: Card, s0: StoreValue, effects: Iterable[EffectInstance]) -> StoreValue:
    store = s0
    for effect in effects:
        store = denote_effect(card, effect, store)
    return store


def witness_execution(
    card: Card,
    guard: GuardDef,
    prefix: Sequence[EffectInstance],
    visible: Sequence[bool],
    inserted: EffectInstance,
    position: int,
) -> DExecution:
    events = [Event(f"p{k + 1}", e) for k, e in enumerate(prefix)]
    events.insert(position, Event(INSERTED, inserted))
    seen = frozenset(f"p{k + 1}" for k, shown in enumerate(visible) if shown)
    observer = Event(
        OBSERVER, card.instance(NOOP), 0, (ActiveGuard(f"{OBSERVER}/g", (guard.name,), seen),)
    )
    return DExecution(card.init, tuple(events) + (observer,))


def classify(
    card: Card,
    guard: GuardDef,
    immediate: Set[str],
    max_prefix: int = 2,
    ints: Sequence[int] = ORACLE_INTS,
    budget: int = 2_000_000,
) -> GuardFixture:
    """
    Accord and conflict sets of one guard by bounded search.

    Args:
        immediate: effect classes in immediate accord with the guard; only
            these may stay invisible to the observer
        budget: maximal number of inserted executions evaluated; classes
            without a witness when it runs out are reported undetermined
    """
    started = time.perf_counter()
    s0 = card.init
    pool = [i for e in card.effects for i in instances(e, ints, PREFIX_INDICES)]
    candidates: Dict[str, List[EffectInstance]] = {
        e.name: instances(e, ints) for e in card.effects if e.name != NOOP
    }
    witnesses: Dict[str, Witness] = {}
    evaluated = 0
    exhausted = False

    for length in range(max_prefix + 1):
        if exhausted or len(witnesses) == len(candidates):
            break
        for prefix in itertools.product(pool, repeat=length):
            if exhausted or len(witnesses) == len(candidates):
                break
            choices = [(True,) if e.name not in immediate else (True, False) for e in prefix]
            partial = [s0]
            for effect in prefix:
                partial.append(denote_effect(card, effect, partial[-1]))
            for visible in itertools.product(*choices):
                vis_store = _fold(card, s0, (e for e, shown in zip(prefix, visible) if shown))
                if not guard_eval(card, guard, partial[-1], vis_store):
                    continue
                for name, options in candidates.items():
                    if name in witnesses:
                        continue
                    for inserted in options:
                        found = None
                        for position in range(length + 1):
                            evaluated += 1
                            pre = denote_effect(card, inserted, partial[position])
                            pre = _fold(card, pre, prefix[position:])
                            if not guard_eval(card, guard, pre, vis_store):
                                found = position
                                break
                        if found is not None:
                            execution = witness_execution(card, guard, prefix, visible, inserted, found)
                            witnesses[name] = Witness(name, execution)
                            break
                    if evaluated > budget:
                        exhausted = True
                        break
                if exhausted:
                    break

    conflict = tuple(e.name for e in card.effects if e.name in witnesses)
    undetermined = tuple(n for n in candidates if n not in witnesses) if exhausted else ()
    accord = tuple(e.name for e in card.effects if e.name not in witnesses and e.name not in undetermined)
    logger.info(
        f"{card.name}/{guard.name}: oracle accord={{{', '.join(accord)}}} after {evaluated} insertions "
        f"({(time.perf_counter() - started) * 1000:.0f} ms)"
    )
    return GuardFixture(
        guard=guard.name,
        accord=accord,
        conflict=conflict,
        witnesses=tuple(witnesses[n] for n in conflict),
        undetermined=undetermined,
        status=BUDGET if exhausted else EXHAUSTIVE,
    )


def build_fixture(
    card: Card,
    max_prefix: int = 2,
    budget: int = 2_000_000,
    enumeration: Optional[EnumerationSolver] = None,
) -> Fixture:
    """
    Fixture of every guard of the card. Immediate accord is decided by
    ``enumeration`` (the configured enumeration domains by default).
    """
    backend = enumeration or make_backend(kind="enumeration")
    entries = []
    for guard in card.guards:
        immediate = set(ia_report(card, guard, backend).accord)
        entries.append(classify(card, guard, immediate, max_prefix, budget=budget))
    return Fixture(card.name, tuple(entries))


def build_fixtures(
    corpus: Optional[Corpus] = None,
    names: Optional[Sequence[str]] = None,
    workers: int = 1,
    enumeration: Optional[EnumerationSolver] = None,
) -> Dict[str, Fixture]:
    """Fixtures of the benchmark applications, one card per worker"""
    backend = enumeration or make_backend(kind="enumeration")
    corpus = corpus or Corpus()
    apps = [a for a in BENCHMARK_APPLICATIONS if names is None or a.name in names]
    cards = {app.name: corpus.card(app.name) for app in apps}

    def build(app) -> Tuple[str, Fixture]:
        return app.name, build_fixture(cards[app.name], app.oracle_prefix, enumeration=backend)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return dict(pool.map(build, apps))
    return dict(build(app) for app in apps)


def fixture_path(name: str, directory: Optional[Path] = None) -> Path:
    return (directory or FIXTURE_DIR) / f"{name}{FIXTURE_SUFFIX}"


def replays(card: Card, witness: Witness) -> bool:
    """
    The witness without its inserted event is well-formed, and inserting the
    event breaks guard compliance of the observer.
    """
    execution = witness.execution
    original = restrict(execution, [i for i in execution.event_ids if i != INSERTED])
    if check_well_formed(card, original):
        return False
    return any(v.condition == GUARD_COMPLIANCE for v in check_well_formed(card, execution))
