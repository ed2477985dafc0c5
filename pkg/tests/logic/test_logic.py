"""
Formula language: substitution, effect application, simplification and the
validity backends.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.formats.expr import LogicScope, parse_formula
from core.inference import immediate_accord
from core.logic import (
    FALSE,
    INT,
    TRUE,
    Arith,
    Cmp,
    Field,
    IntLit,
    Side,
    StoreSchema,
    Var,
    apply_effect,
    forall,
    rename_store,
    simplify,
    substitute,
    to_smtlib,
)
from core.logic.solvers import EnumerationSolver, parse_model
from core.logic.types import COMPARISONS, GLOBAL, REPLICA

SCHEMA = StoreSchema((("val", INT),))


def formula(text, stores=("g", "r"), **variables):
    scope = LogicScope(SCHEMA, stores, {name: Var(name, sort) for name, sort in variables.items()})
    return parse_formula(text, scope)


class Increment:
    assignments = {"val": Arith("+", Field("s", "val", INT), Var("n", INT))}


@pytest.mark.unit
def test_simplify_folds_constants():
    assert simplify(formula("1 + 2 <= 3")) == TRUE
    assert simplify(formula("g - 0 == g")) == TRUE
    assert simplify(formula("0 > 1")) == FALSE


@pytest.mark.unit
def test_substitute_avoids_capture():
    """A bound variable named like the replacement is renamed apart"""
    m = Var("m", INT)
    f = forall([m], Cmp("<=", Var("n", INT), m))
    result = substitute(f, {"n": m})
    assert result.params[0].name != "m"
    assert result.body.lhs == m


@pytest.mark.unit
def test_apply_effect_on_global_side_only():
    guard = formula("r <= g")
    updated = apply_effect(guard, Increment(), Side.GLOBAL)
    assert updated == formula("r <= g + n", n=INT)
    both = apply_effect(guard, Increment(), Side.BOTH)
    assert both == formula("r + n <= g + n", n=INT)


@pytest.mark.unit
def test_rename_store():
    f = formula("r <= g")
    assert rename_store(f, "r", "x") == Cmp("<=", Field("x", "val", INT), Field("g", "val", INT))


@pytest.mark.unit
def test_enumeration_decides_small_formulas(enumeration):
    assert enumeration.check(formula("r <= g => r <= g + 1")).is_valid
    result = enumeration.check(formula("r <= g => r <= g - n", n=INT))
    assert result.is_invalid
    assert result.witness


@pytest.mark.unit
def test_enumeration_reports_sampling_as_not_exhaustive():
    from core.logic.solvers import EnumerationSolver

    tiny = EnumerationSolver(int_domain=(-2, 2), param_domain=(-2, 2), budget=10, sample_size=50)
    result = tiny.check(formula("r <= g => r <= g + 1"))
    assert result.is_valid
    assert not result.exhaustive


@pytest.mark.unit
def test_smtlib_checks_negation():
    script = to_smtlib(formula("r <= g"))
    assert "(assert (not" in script
    assert "(check-sat)" in script


@pytest.mark.unit
def test_parse_model_reads_negative_values():
    model = parse_model("((define-fun n () Int (- 3)) (define-fun b () Bool true))")
    assert model == {"n": -3, "b": True}


@pytest.mark.integration
def test_solver_agrees_with_enumeration(solver, enumeration):
    for text in ("r <= g => r <= g + 1", "r <= g => r - 1 <= g", "r <= g => g <= r"):
        f = formula(text)
        assert solver.check(f).verdict == enumeration.check(f).verdict


@pytest.mark.unit
def test_make_backend_without_any_solver(mocker):
    from core.exceptions import SolverError
    from core.logic.solvers import make_backend

    mocker.patch("core.logic.solvers.shutil.which", return_value=None)
    mocker.patch("core.logic.solvers.Z3Solver", side_effect=ImportError("no z3"))
    with pytest.raises(SolverError):
        make_backend(kind="solver")


@pytest.mark.unit
def test_process_solver_reports_timeouts_as_unknown(mocker):
    import subprocess

    from core.logic.solvers import ProcessSolver

    mocker.patch("core.logic.solvers.subprocess.run", side_effect=subprocess.TimeoutExpired("z3", 1.0))
    result = ProcessSolver("z3", timeout=1.0).check(formula("r <= g"))
    assert result.is_unknown
    assert result.reason == "timeout"


WIDE = EnumerationSolver(int_domain=(-10, 10), param_domain=(-10, 10), budget=200_000)
COUNTER_EFFECTS = [
    ("counter", "Add"),
    ("counter", "Sub"),
    ("counter", "Set"),
    ("counter_interest", "Interest"),
]


def linear_guard(a, b, k, op):
    """a*g + b*r + k <op> 0 over the single counter field"""
    g = Arith("*", IntLit(a), Field(GLOBAL, "val", INT))
    r = Arith("*", IntLit(b), Field(REPLICA, "val", INT))
    return Cmp(op, Arith("+", Arith("+", g, r), IntLit(k)), IntLit(0))


@pytest.mark.integration
@settings(max_examples=200, deadline=None)
@given(
    a=st.integers(min_value=-3, max_value=3),
    b=st.integers(min_value=-3, max_value=3),
    k=st.integers(min_value=-6, max_value=6),
    op=st.sampled_from(COMPARISONS),
    pair=st.sampled_from(COUNTER_EFFECTS),
)
def test_immediate_accord_agrees_with_enumeration(corpus, solver, a, b, k, op, pair):
    card = corpus.card(pair[0])
    effect = card.effect(pair[1])
    guard = linear_guard(a, b, k, op)
    expected = immediate_accord(card, guard, effect, WIDE)
    assert expected is not None
    assert immediate_accord(card, guard, effect, solver) == expected
