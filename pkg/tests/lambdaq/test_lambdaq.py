"""
λ^Q operations: deterministic replays of the operation execution rules and
refinement type checking against event specifications.
"""

import pytest

from core.card.semantics import holds
from core.exceptions import LambdaQTypeError, ParseError, ScheduleError
from core.formats.expr import LogicScope, parse_formula
from core.formats.ops_parser import parse_ops
from core.lambdaq import discharge, dump_vcs, op_execute, typecheck_op, verdict_of
from core.lambdaq.semantics import DRIFT
from core.logic import GLOBAL, INT, POST, PRE, TRUE, Implies, Var, conj, iff, implies

SPEC = "Op(BankAccount, int, (s >= 0 => s' >= 0) && a == s - s')"

TOP_GUARD = f"""
op withdraw(n: {{v: int | v >= 0}}) : {SPEC} =
  query Top as x in
    if x >= n then emit (Sub(n), n) else emit (NoOp, 0)
"""

FLIPPED = f"""
op withdraw(n: {{v: int | v >= 0}}) : {SPEC} =
  query LE as x in
    if x <= n then emit (Sub(n), n) else emit (NoOp, 0)
"""

UNKNOWN_EFFECT = f"""
op withdraw(n: {{v: int | v >= 0}}) : {SPEC} =
  emit (Withdraw(n), n)
"""

SHADOWED = f"""
op withdraw(n: {{v: int | v >= 0}}) : {SPEC} =
  query LE as n in emit (NoOp, 0)
"""


def single_op(text, card):
    (op,) = parse_ops(text, lambda name: card)
    return op


def satisfying_balances(psi, balances):
    """Global balances at which the accumulated query clauses hold"""
    return [v for v in balances if holds(psi, {GLOBAL: {"val": v}})]


@pytest.mark.unit
def test_deposit_emits_without_querying(bank, bank_ops):
    state = op_execute(bank, bank_ops["deposit"].apply(100))
    assert state.s["val"] == 0
    assert str(state.effect) == "Add(100)"
    assert state.rval == -100
    assert state.clauses == ()
    assert state.psi == TRUE


@pytest.mark.unit
def test_withdraw_sees_drifted_deposit(bank, bank_ops):
    state = op_execute(bank, bank_ops["withdraw"].apply(10), [bank.instance("Add", 100)])
    assert state.s["val"] == 100
    assert str(state.effect) == "Sub(10)"
    assert state.rval == 10
    assert satisfying_balances(state.psi, range(90, 111)) == list(range(100, 111))


@pytest.mark.unit
def test_strong_withdraw_falls_back_to_eq(bank, bank_ops):
    """A stale LE answer of 0 sends swithdraw to its EQ query, which sees 90"""
    state = op_execute(
        bank,
        bank_ops["swithdraw"].apply(10),
        [bank.instance("Add", 100), bank.instance("Sub", 10)],
        query_choices=[0, 90],
        order="DDQQ",
    )
    assert state.s["val"] == 90
    assert str(state.effect) == "Sub(10)"
    assert [guards for guards, _ in state.clauses] == [("LE",), ("EQ",)]
    assert satisfying_balances(state.psi, range(-10, 120)) == [90]


@pytest.mark.unit
def test_drift_may_not_break_an_answered_query(bank, bank_ops):
    with pytest.raises(ScheduleError) as raised:
        op_execute(
            bank,
            bank_ops["withdraw"].apply(10),
            [bank.instance("Add", 100), bank.instance("Sub", 10)],
            order="DQD",
        )
    assert raised.value.details["rule"] == DRIFT


@pytest.mark.unit
def test_query_choice_must_satisfy_the_guard(bank, bank_ops):
    with pytest.raises(ScheduleError):
        op_execute(bank, bank_ops["withdraw"].apply(10), query_choices=[5])


@pytest.mark.integration
@pytest.mark.parametrize("name", ["deposit", "withdraw", "swithdraw"])
def test_bank_operations_typecheck(bank, bank_ops, solver, name):
    results = discharge(typecheck_op(bank, bank_ops[name]), solver)
    assert verdict_of(results) == "valid"


@pytest.mark.unit
def test_withdraw_emit_obligation(bank, bank_ops):
    vcs = typecheck_op(bank, bank_ops["withdraw"])
    rules = [vc.rule for vc in vcs]
    assert rules.count("type-r") == 2
    then_branch = next(vc for vc in vcs if vc.rule == "type-r" and "Sub(n)" in vc.origin)
    assert "query LE as x" in then_branch.origin


@pytest.mark.integration
def test_withdraw_then_branch_obligation_is_the_expected_formula(bank, bank_ops, solver):
    vcs = typecheck_op(bank, bank_ops["withdraw"])
    then_branch = next(vc for vc in vcs if vc.rule == "type-r" and "Sub(n)" in vc.origin)
    scope = LogicScope(bank.schema, (PRE, POST, "x"), {"n": Var("n", INT), "a": Var("a", INT)})
    premises = parse_formula("n >= 0 && x <= s && x >= n && s' == s - n", scope)
    spec = parse_formula("(s >= 0 => s' >= 0) && a == s - s'", scope)
    returned = parse_formula("a == n", scope)

    assert isinstance(then_branch.formula, Implies)
    assert solver.check(iff(then_branch.formula.lhs, conj(premises, returned))).is_valid
    assert solver.check(iff(then_branch.formula.rhs, spec)).is_valid
    expected = implies(conj(premises, returned), spec)
    assert solver.check(implies(then_branch.formula, expected)).is_valid
    assert solver.check(implies(expected, then_branch.formula)).is_valid


@pytest.mark.integration
@pytest.mark.parametrize("text", [TOP_GUARD, FLIPPED])
def test_mutants_are_rejected_with_a_witness(bank, solver, text):
    results = discharge(typecheck_op(bank, single_op(text, bank)), solver)
    assert verdict_of(results) == "invalid"
    failing = [r for r in results if r.result.is_invalid]
    assert failing[0].result.witness


@pytest.mark.unit
def test_unknown_effect_is_a_parse_error(bank):
    with pytest.raises(ParseError):
        single_op(UNKNOWN_EFFECT, bank)


@pytest.mark.unit
def test_rebinding_a_name_is_a_type_error(bank):
    with pytest.raises(LambdaQTypeError):
        typecheck_op(bank, single_op(SHADOWED, bank))


@pytest.mark.unit
def test_dump_vcs_writes_smtlib(bank, bank_ops, tmp_path):
    paths = dump_vcs(typecheck_op(bank, bank_ops["withdraw"]), tmp_path, prefix="withdraw")
    assert paths
    assert all(p.suffix == ".smt2" for p in paths)
    assert "(check-sat)" in paths[0].read_text(encoding="utf-8")
