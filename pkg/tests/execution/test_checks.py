"""
D-executions: well-formedness, carefulness, event specifications and
invariants.
"""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.card import StoreValue
from core.card.semantics import guard_eval
from core.execution import (
    ActiveGuard,
    DExecution,
    Event,
    EventSpec,
    check_careful,
    check_well_formed,
    eval_execution,
    event_satisfies,
    first_invariant_failure,
    prefix_values,
    random_execution,
    restrict,
)
from core.execution.checks import CAREFUL, CAUSAL, GUARD_COMPLIANCE, TRANSITIVITY
from core.formats.expr import LogicScope, parse_formula
from core.logic import INT, POST, PRE, Var


def two_withdrawals(bank, second_sees_first: bool) -> DExecution:
    s0 = StoreValue.of(bank.schema, {"val": 10})
    seen = frozenset({"w1"}) if second_sees_first else frozenset()
    return DExecution(
        s0,
        (
            Event("w1", bank.instance("Sub", 7), 7, (ActiveGuard("w1/q0", ("LE",)),)),
            Event("w2", bank.instance("Sub", 7), 7, (ActiveGuard("w2/q0", ("LE",), seen),)),
        ),
    )


def conditions(violations):
    return {v.condition for v in violations}


@pytest.mark.unit
def test_blind_withdrawals_break_guard_compliance(bank):
    L = two_withdrawals(bank, second_sees_first=False)
    assert eval_execution(bank, L)["val"] == -4
    assert conditions(check_well_formed(bank, L)) == {GUARD_COMPLIANCE}


@pytest.mark.unit
def test_careful_needs_conflicting_events_visible(bank):
    accords = {"LE": ("NoOp", "Add")}
    blind = two_withdrawals(bank, second_sees_first=False)
    assert conditions(check_careful(bank, blind, accords)) == {CAREFUL}

    informed = two_withdrawals(bank, second_sees_first=True)
    assert check_careful(bank, informed, accords) == []
    assert check_well_formed(bank, informed) == []


@pytest.mark.unit
def test_careful_accepts_accord_reports(bank, enumeration):
    from core.inference import tas_fixed_point

    report = tas_fixed_point(bank, bank.guard("LE"), enumeration)
    blind = two_withdrawals(bank, second_sees_first=False)
    assert len(check_careful(bank, blind, {"LE": report})) == 1


@pytest.mark.unit
def test_causality_and_transitivity_violations(bank):
    add = bank.instance("Add", 1)
    L = DExecution(
        bank.init,
        (
            Event("e1", add, 0, (ActiveGuard("g1", ("Top",), frozenset({"e2"})),)),
            Event("e2", add),
            Event("e3", add, 0, (ActiveGuard("g3", ("Top",), frozenset({"e2"})),)),
            Event("e4", add, 0, (ActiveGuard("g4", ("Top",), frozenset({"e3"})),)),
        ),
    )
    found = conditions(check_well_formed(bank, L))
    assert CAUSAL in found
    assert TRANSITIVITY in found


@pytest.mark.unit
def test_event_specification_of_withdraw(bank):
    scope = LogicScope(bank.schema, (PRE, POST), {"a": Var("a", INT)})
    spec = EventSpec(parse_formula("(s >= 0 => s' >= 0) && a == s - s'", scope))
    L = two_withdrawals(bank, second_sees_first=False)
    assert event_satisfies(bank, L, "w1", spec)
    assert not event_satisfies(bank, L, "w2", spec)


@pytest.mark.unit
def test_first_invariant_failure(bank):
    invariant = parse_formula("s >= 0", LogicScope(bank.schema, (PRE,)))
    index, store = first_invariant_failure(bank, two_withdrawals(bank, False), invariant)
    assert index == 2
    assert store["val"] == -4
    assert first_invariant_failure(bank, two_withdrawals(bank, True), invariant) is not None


@pytest.mark.unit
def test_duplicate_event_ids_are_rejected(bank):
    with pytest.raises(ValueError):
        DExecution(bank.init, (Event("e", bank.instance("NoOp")), Event("e", bank.instance("NoOp"))))


@pytest.mark.unit
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000), size=st.integers(min_value=0, max_value=6))
def test_random_executions_are_well_formed(joint, seed, size):
    L = random_execution(joint, random.Random(seed), size)
    assert check_well_formed(joint, L) == []
    for k in range(len(L)):
        assert check_well_formed(joint, restrict(L, L.event_ids[:k])) == []


def failing_guards(card, L):
    values = prefix_values(card, L)
    failing = set()
    for index, event in enumerate(L.events):
        for guard in event.guards:
            vis_store = eval_execution(card, restrict(L, guard.visible))
            if not guard_eval(card, card.guard(guard.guards[0]), values[index], vis_store):
                failing.add((event.id, guard.id))
    return failing


@pytest.mark.unit
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000), size=st.integers(min_value=1, max_value=6))
def test_kept_failing_guards_are_reported(joint, seed, size):
    L = random_execution(joint, random.Random(seed), size, keep_failing=True)
    violations = check_well_formed(joint, L)
    assert conditions(violations) <= {GUARD_COMPLIANCE}
    assert {v.witnesses for v in violations} == failing_guards(joint, L)


@pytest.mark.unit
def test_keep_failing_produces_compliance_violations(bank):
    reported = 0
    for seed in range(200):
        L = random_execution(bank, random.Random(seed), 4, guard_probability=1.0, keep_failing=True)
        if GUARD_COMPLIANCE in conditions(check_well_formed(bank, L)):
            reported += 1
    assert reported > 0


@pytest.mark.unit
def test_causality_violation_alone(bank):
    add = bank.instance("Add", 1)
    L = DExecution(
        bank.init,
        (
            Event("e1", add, 0, (ActiveGuard("g1", ("Top",), frozenset({"e2"})),)),
            Event("e2", add),
        ),
    )
    violations = check_well_formed(bank, L)
    assert conditions(violations) == {CAUSAL}
    assert violations[0].witnesses == ("e1", "g1", "e2")


@pytest.mark.unit
def test_transitivity_violation_alone(bank):
    add = bank.instance("Add", 1)
    L = DExecution(
        bank.init,
        (
            Event("e1", add),
            Event("e2", add, 0, (ActiveGuard("g2", ("Top",), frozenset({"e1"})),)),
            Event("e3", add, 0, (ActiveGuard("g3", ("Top",), frozenset({"e2"})),)),
        ),
    )
    violations = check_well_formed(bank, L)
    assert conditions(violations) == {TRANSITIVITY}
    assert violations[0].witnesses == ("g3", "e2", "g2", "e1")
