"""
Immediate accords, weakest consistency preconditions and the transitive
accord fixed point.
"""

import random

import pytest

from core.card import StoreValue
from core.card.semantics import denote_effect, guard_eval, random_store
from core.corpus import instances
from core.inference import (
    AccordStatus,
    AccordTable,
    conflict_table,
    ia_report,
    immediate_accord,
    tas_fixed_point,
    wcp,
)
from core.logic import conj, implies
from core.logic.solvers import ValidityResult, Verdict


@pytest.mark.unit
def test_immediate_accord_of_bank_guards(bank, enumeration):
    le, ge = bank.guard("LE"), bank.guard("GE")
    assert immediate_accord(bank, le, bank.effect("Add"), enumeration) is True
    assert immediate_accord(bank, le, bank.effect("Sub"), enumeration) is False
    assert immediate_accord(bank, ge, bank.effect("Add"), enumeration) is False
    assert immediate_accord(bank, ge, bank.effect("NoOp"), enumeration) is True


@pytest.mark.unit
def test_wcp_of_bank_guard_is_the_guard(bank, enumeration):
    """Add and Sub shift both stores alike, so LE is already invariant"""
    le = bank.guard("LE").body
    for effect in bank.effects:
        assert enumeration.check(implies(le, wcp(bank, effect, le))).is_valid
    report = tas_fixed_point(bank, bank.guard("LE"), enumeration)
    assert report.status == AccordStatus.CONVERGED
    assert report.iterations == 1


@pytest.mark.unit
def test_bank_le_conflicts_with_sub_only(bank, enumeration):
    report = tas_fixed_point(bank, bank.guard("LE"), enumeration)
    assert report.accord == ("NoOp", "Add")
    assert report.conflict == ("Sub",)


@pytest.mark.unit
def test_top_and_eq_are_extremes(bank, enumeration):
    table = conflict_table(bank, enumeration)
    assert table["Top"].conflict == ()
    assert table["EQ"].accord == ("NoOp",)


@pytest.mark.integration
def test_joint_account_chained_conflict(joint, solver):
    """Request leaves LE && App? alone, but enables Approve to break it"""
    both = joint.conjunction(["LE", "App?"])
    immediate = ia_report(joint, both, solver)
    assert "Request" in immediate.accord

    report = tas_fixed_point(joint, both, solver)
    assert report.accord == ("NoOp", "Add")
    assert "Request" in report.conflict
    assert "Request" in report.immediate
    assert report.iterations >= 1


@pytest.mark.integration
@pytest.mark.parametrize(
    "guard, accord",
    [
        ("LE", ("NoOp", "Add", "Request", "Approve", "Reset")),
        ("GE", ("NoOp", "Sub", "Request", "Approve", "Reset", "SubReset")),
        ("App?", ("NoOp", "Add", "Sub", "Set")),
        ("LEApp", ("NoOp", "Add")),
    ],
)
def test_joint_account_table(joint, solver, guard, accord):
    assert tas_fixed_point(joint, joint.guard(guard), solver).accord == accord


@pytest.mark.integration
def test_conspiring_booleans(corpus, solver):
    card = corpus.card("conspiring_booleans")
    same_b = card.guard("SameB")
    assert ia_report(card, same_b, solver).accord == ("NoOp", "SetA")
    report = tas_fixed_point(card, same_b, solver)
    assert report.accord == ("NoOp",)
    assert report.conflict == ("SetA", "CopyAB")


@pytest.mark.integration
@pytest.mark.slow
def test_index_refinement(corpus, solver):
    """Sub on account 3 cannot break a guard on account 0"""
    kv = corpus.card("kv_accounts")
    report = tas_fixed_point(kv, kv.guard("LE_0"), solver)
    assert "Sub" in report.conflict
    assert report.index_conflicts["Sub"] == {"i": frozenset({0})}
    assert report.permits(kv.instance("Sub", 3, 5))
    assert not report.permits(kv.instance("Sub", 0, 5))
    last = tas_fixed_point(kv, kv.guard("LE_9"), solver)
    assert last.index_conflicts["Sub"] == {"i": frozenset({9})}
    assert last.permits(kv.instance("Sub", 0, 5))


@pytest.mark.integration
def test_accord_table_caches_and_switches_to_immediate(joint, solver):
    full = AccordTable(joint, solver)
    immediate = AccordTable(joint, solver, ia_only=True)
    assert full.report(["LE", "App?"]) is full.report(["LE", "App?"])
    assert "Request" in immediate.accord(["LE", "App?"])
    assert "Request" not in full.accord(["LE", "App?"])
    assert full.permits(["LE"], joint.instance("Add", 4))


@pytest.mark.unit
def test_max_iter_must_be_positive(bank, enumeration):
    with pytest.raises(ValueError):
        tas_fixed_point(bank, bank.guard("LE"), enumeration, max_iter=0)


SMALL_CARDS = ["bank_account", "bank_reset", "conspiring_booleans", "fsm", "joint_account"]


@pytest.mark.unit
def test_exhausted_iterations_fall_back_to_identity(corpus, enumeration):
    """SameB needs a second round for CopyAB; one round is not enough"""
    card = corpus.card("conspiring_booleans")
    same_b = card.guard("SameB")
    report = tas_fixed_point(card, same_b, enumeration, max_iter=1)
    assert report.status == AccordStatus.FALLBACK_USED
    assert report.iterations == 1
    assert report.invariant_used == conj(same_b.body, card.guard("EQ").body)
    assert report.accord == ("NoOp",)
    for effect in card.effects:
        preserved = implies(report.invariant_used, wcp(card, effect, report.invariant_used))
        assert enumeration.check(preserved).is_valid, effect.name


@pytest.mark.unit
def test_unknown_verdicts_block_every_effect(bank, enumeration, mocker):
    mocker.patch.object(
        enumeration, "check", return_value=ValidityResult(Verdict.UNKNOWN, reason="timeout")
    )
    report = tas_fixed_point(bank, bank.guard("LE"), enumeration)
    assert report.status == AccordStatus.UNKNOWN
    assert report.accord == ("NoOp",)
    assert set(report.conflict) == {"Add", "Sub"}
    assert not report.permits(bank.instance("Add", 1))
    assert report.permits(bank.instance("NoOp"))
    assert immediate_accord(bank, bank.guard("LE"), bank.effect("Add"), enumeration) is None


@pytest.mark.integration
@pytest.mark.parametrize("name", SMALL_CARDS)
def test_invariant_used_is_a_consistency_invariant(corpus, solver, name):
    card = corpus.card(name)
    for guard in card.guards:
        report = tas_fixed_point(card, guard, solver)
        assert report.status != AccordStatus.UNKNOWN, guard.name
        invariant = report.invariant_used
        assert solver.check(implies(invariant, guard.body)).is_valid, guard.name
        for effect in card.effects:
            preserved = implies(invariant, wcp(card, effect, invariant))
            assert solver.check(preserved).is_valid, (guard.name, effect.name)


@pytest.mark.integration
@pytest.mark.parametrize("name", SMALL_CARDS)
def test_immediate_accord_holds_on_sampled_stores(corpus, solver, name):
    card = corpus.card(name)
    rng = random.Random(name)
    for guard in card.guards:
        for effect_name in ia_report(card, guard, solver).accord:
            for inst in instances(card.effect(effect_name)):
                for _ in range(50):
                    s_g = random_store(card, rng, (-4, 4))
                    s_r = random_store(card, rng, (-4, 4))
                    if not guard_eval(card, guard, s_g, s_r):
                        continue
                    after = denote_effect(card, inst, s_g)
                    assert guard_eval(card, guard, after, s_r), (guard.name, str(inst), s_g, s_r)


@pytest.mark.unit
def test_interest_doubles_and_conflicts_with_le(corpus, enumeration):
    """Doubling a negative balance lowers it, but LE is preserved on both sides"""
    card = corpus.card("counter_interest")
    interest = card.instance("Interest")
    assert denote_effect(card, interest, StoreValue.of(card.schema, {"val": 3}))["val"] == 6
    assert denote_effect(card, interest, StoreValue.of(card.schema, {"val": -2}))["val"] == -4

    le = card.guard("LE")
    assert immediate_accord(card, le, card.effect("Interest"), enumeration) is False
    report = tas_fixed_point(card, le, enumeration)
    assert report.status == AccordStatus.CONVERGED
    assert report.accord == ("NoOp", "Add")
    assert "Interest" in report.conflict
