"""
Benchmark corpus, golden fixtures and the bounded oracle that builds them.
"""

import pytest

from core.corpus import (
    BENCHMARK_APPLICATIONS,
    build_fixture,
    classify,
    fixture_path,
    instances,
    load_application,
    parse_fixture,
    read_fixture,
    replays,
    serialize_fixture,
)
from core.corpus.fixtures import EXHAUSTIVE, INSERTED
from core.inference import ia_report, tas_fixed_point

SMALL = ["bank_account", "bank_reset", "conspiring_booleans", "fsm", "joint_account"]


@pytest.mark.unit
@pytest.mark.parametrize("app", BENCHMARK_APPLICATIONS, ids=lambda a: a.name)
def test_benchmark_counts(corpus, app):
    card = corpus.card(app.name)
    assert len(card.guards) == app.guards
    assert len(card.effects) == app.effects


@pytest.mark.unit
def test_application_bundles_operations():
    app = load_application("joint_account")
    assert app.card.name == "JointAccount"
    assert {"deposit", "withdrawJ", "request", "approve", "reset"} <= set(app.ops)


@pytest.mark.unit
@pytest.mark.parametrize("app", BENCHMARK_APPLICATIONS, ids=lambda a: a.name)
def test_fixture_witnesses_replay(corpus, app):
    card = corpus.card(app.name)
    fixture = read_fixture(fixture_path(app.name), card)
    assert fixture.card == card.name
    assert set(fixture.guard_names) == set(card.guard_names)
    for entry in fixture.guards:
        assert entry.status == EXHAUSTIVE
        assert {w.effect for w in entry.witnesses} == set(entry.conflict)
        for witness in entry.witnesses:
            assert INSERTED in witness.execution.event_ids
            assert replays(card, witness), f"{app.name}/{entry.guard}/{witness.effect}"


@pytest.mark.unit
def test_fixture_text_round_trip(corpus):
    card = corpus.card("fsm")
    fixture = read_fixture(fixture_path("fsm"), card)
    assert parse_fixture(serialize_fixture(fixture), card) == fixture


@pytest.mark.integration
@pytest.mark.parametrize("name", SMALL)
def test_inference_matches_fixture(corpus, solver, name):
    card = corpus.card(name)
    fixture = read_fixture(fixture_path(name), card)
    for entry in fixture.guards:
        report = tas_fixed_point(card, card.guard(entry.guard), solver)
        assert report.accord == entry.accord, entry.guard


@pytest.mark.integration
def test_oracle_rebuilds_bank_fixture(corpus, enumeration):
    card = corpus.card("bank_account")
    built = build_fixture(card, enumeration=enumeration)
    stored = read_fixture(fixture_path("bank_account"), card)
    for entry in built.guards:
        assert entry.accord == stored.guard(entry.guard).accord
        assert all(replays(card, w) for w in entry.witnesses)


@pytest.mark.unit
def test_oracle_finds_the_chained_conflict(corpus, enumeration):
    """SetA only conflicts with SameB through a later CopyAB"""
    card = corpus.card("conspiring_booleans")
    same_b = card.guard("SameB")
    immediate = set(ia_report(card, same_b, enumeration).accord)
    entry = classify(card, same_b, immediate)
    assert entry.accord == ("NoOp",)
    assert entry.witness("SetA") is not None


@pytest.mark.unit
def test_oracle_budget_marks_classes_undetermined(corpus):
    card = corpus.card("bank_account")
    entry = classify(card, card.guard("LE"), {"NoOp", "Add"}, budget=0)
    assert entry.status != EXHAUSTIVE
    assert entry.accord == ("NoOp",)


@pytest.mark.unit
def test_instances_respect_constraints(corpus):
    kv = corpus.card("kv_accounts")
    subs = instances(kv.effect("Sub"), ints=(-1, 1), index_pool=(0, 1))
    assert [str(t) for t in subs] == ["Sub(0, 1)", "Sub(1, 1)"]


@pytest.mark.unit
def test_kv_accounts_guard_every_account(corpus):
    kv = corpus.card("kv_accounts")
    assert kv.effect_names == ("NoOp", "Add", "Sub")
    assert {f"LE_{k}" for k in range(10)} | {"SumLE"} <= set(kv.guard_names)
    fixture = read_fixture(fixture_path("kv_accounts"), kv)
    for k in range(10):
        entry = fixture.guard(f"LE_{k}")
        assert entry.conflict == ("Sub",)
        assert str(entry.witness("Sub").execution.events[0].effect) == f"Sub({k}, 1)"


@pytest.mark.unit
def test_oracle_decides_immediate_accord_by_enumeration(corpus, mocker, monkeypatch):
    from core.corpus import oracle
    from core.logic.solvers import EnumerationSolver
    from shared.config.settings import reload_settings

    monkeypatch.setenv("CARDKIT_BACKEND", "solver")
    reload_settings()
    spy = mocker.spy(oracle, "ia_report")
    card = corpus.card("fsm")
    built = oracle.build_fixture(card, max_prefix=1)
    assert [entry.guard for entry in built.guards] == list(card.guard_names)
    assert spy.call_count == len(card.guards)
    assert all(isinstance(call.args[2], EnumerationSolver) for call in spy.call_args_list)
