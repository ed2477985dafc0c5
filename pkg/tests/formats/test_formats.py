"""
File grammars and machine-readable output.
"""

import pytest

from core.card import StoreValue
from core.exceptions import ParseError
from core.execution import ActiveGuard, DExecution, Event
from core.formats import (
    format_items,
    parse_card,
    parse_execution,
    parse_items,
    parse_scenario,
    serialize_card,
    serialize_execution,
    serialize_scenario,
)
from core.formats.lexer import tokenize


@pytest.mark.unit
@pytest.mark.parametrize("name", ["bank_account", "fsm", "kv_accounts"])
def test_cards_survive_serialization(corpus, name):
    card = corpus.card(name)
    assert parse_card(serialize_card(card)) == card


@pytest.mark.unit
def test_scenario_survives_serialization(corpus):
    path = corpus.path("concurrent_withdraw", ".scenario")
    scenario = parse_scenario(path.read_text(encoding="utf-8"), load_card=corpus.card)
    assert scenario.init == (("val", 10),)
    assert scenario.replica_names == ("r1", "r2")
    assert parse_scenario(serialize_scenario(scenario), load_card=corpus.card) == scenario


@pytest.mark.unit
def test_execution_records(bank):
    L = DExecution(
        StoreValue.of(bank.schema, {"val": 5}),
        (
            Event("r1@1", bank.instance("Add", 100), -100),
            Event(
                "r2",
                bank.instance("Sub", 10),
                10,
                (ActiveGuard("r2/q0", ("LE",), frozenset({"r1"})),),
            ),
            Event("r3@3", bank.instance("NoOp"), 0, (ActiveGuard("r3@3/q0", ("LE", "GE")),)),
        ),
    )
    text = serialize_execution(L)
    assert "event\tr1@1\tAdd(100)\t-100" in text
    assert parse_execution(text, bank) == L


@pytest.mark.unit
def test_items():
    text = format_items([("accord", ["NoOp", "Add"]), ("ok", True), ("steps", 12)])
    assert parse_items(text) == [("accord", "NoOp,Add"), ("ok", "true"), ("steps", "12")]


@pytest.mark.unit
def test_lexer_names_and_comments():
    texts = [t.text for t in tokenize("guard App? := g.b2 == r.b2 // approval\n# note\ns'")]
    assert "App?" in texts
    assert "s'" in texts
    assert "approval" not in texts


@pytest.mark.unit
@pytest.mark.parametrize(
    "text, fragment",
    [
        ("card C { store { val: int } init { val = 0 } guard LE := r.nope <= g.val }", "unknown field"),
        ("card C { store { val: int } init { val = 0 } guard LE := r.val <= true }", "comparison"),
        ("card C { store { val: int } init { val = 0 } effect E { val := s.val + }", ""),
    ],
)
def test_card_errors_carry_a_location(text, fragment):
    with pytest.raises(ParseError) as raised:
        parse_card(text, source="c.card")
    assert raised.value.details["source"] == "c.card"
    assert "line" in raised.value.details
    assert fragment in str(raised.value)


@pytest.mark.unit
def test_scenario_errors(corpus):
    with pytest.raises(ParseError):
        parse_scenario("scenario NoCard { seed 1; }")
    with pytest.raises(ParseError):
        parse_scenario("scenario Twice { card bank_account; replica r { } replica r { } }")
    with pytest.raises(ParseError):
        parse_scenario("scenario Blind { card bank_account; invariant s >= 0; }")
