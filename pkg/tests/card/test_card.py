"""
Card definitions: builtins, effect instances, denotations and validation.
"""

import pytest

from core.card import NOOP, StoreValue, compose_effects, denote_effect, guard_eval, validate_card
from core.exceptions import SchemaError, SortError
from core.formats.card_parser import parse_card

NOT_REFLEXIVE = """
card Broken {
  store { val: int }
  init { val = 0 }
  effect Add(n: int where n >= 0 && n < 0) { val := s.val + n }
  guard LT := r.val < g.val
}
"""


@pytest.mark.unit
def test_builtins_are_added(bank):
    assert bank.effect_names == (NOOP, "Add", "Sub")
    assert bank.guard_names == ("Top", "EQ", "LE", "GE")


@pytest.mark.unit
def test_instance_checks_sort_and_constraint(bank):
    assert str(bank.instance("Sub", 3)) == "Sub(3)"
    with pytest.raises(SchemaError):
        bank.instance("Sub", -1)
    with pytest.raises(SortError):
        bank.instance("Add", "ten")
    with pytest.raises(SortError):
        bank.instance("Add")


@pytest.mark.unit
def test_denotation_updates_only_assigned_fields(joint):
    s = StoreValue.of(joint.schema, {"bal": 10, "b1": True, "b2": False})
    assert denote_effect(joint, joint.instance("Approve"), s)["b2"] is True
    assert denote_effect(joint, joint.instance("Approve"), s)["bal"] == 10
    assert denote_effect(joint, joint.instance(NOOP), s) == s


@pytest.mark.unit
def test_declared_composition(joint):
    """SubReset applies Sub and then Reset"""
    s = StoreValue.of(joint.schema, {"bal": 10, "b1": True, "b2": True})
    after = denote_effect(joint, joint.instance("SubReset", 3), s)
    assert after.as_dict() == {"bal": 7, "b1": False, "b2": False}


@pytest.mark.unit
def test_compose_effects_reads_through_first_update(bank):
    twice = compose_effects("AddTwice", bank.effect("Add"), bank.effect("Add"))
    assert [p.name for p in twice.params] == ["n", "n_1"]
    s = StoreValue.of(bank.schema, {"val": 1})
    assert denote_effect(bank, twice.instance(2, 5), s)["val"] == 8


@pytest.mark.unit
def test_guard_evaluation(bank):
    low = StoreValue.of(bank.schema, {"val": 3})
    high = StoreValue.of(bank.schema, {"val": 9})
    le = bank.guard("LE")
    assert guard_eval(bank, le, high, low)
    assert not guard_eval(bank, le, low, high)
    assert guard_eval(bank, bank.guard("EQ"), low, low)


@pytest.mark.unit
def test_conjunction_of_guards(joint):
    both = joint.conjunction(["LE", "App?"])
    assert both.name == "LE && App?"
    s = StoreValue.of(joint.schema, {"bal": 5, "b1": False, "b2": True})
    r = StoreValue.of(joint.schema, {"bal": 5, "b1": False, "b2": False})
    assert not guard_eval(joint, both, s, r)


@pytest.mark.unit
def test_validate_card_reports_every_problem(enumeration):
    card = parse_card(NOT_REFLEXIVE)
    problems = validate_card(card, enumeration)
    assert any("not reflexive" in p for p in problems)
    assert any("unsatisfiable parameter constraint" in p for p in problems)


@pytest.mark.integration
def test_corpus_cards_are_valid(corpus, enumeration):
    for name in ("bank_account", "bank_reset", "conspiring_booleans", "joint_account", "fsm", "counter"):
        assert validate_card(corpus.card(name), enumeration) == []
