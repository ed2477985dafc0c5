"""
Simulated replica network: locking, permitted emission, convergence and the
executions it produces.
"""

import pytest

from core.exceptions import NonQuiescenceError
from core.execution import prefix_values
from core.execution.checks import GUARD_COMPLIANCE
from core.replica_sim import SimContext, check_execution, explore, global_value, run
from shared.config.settings import get_settings


def load(corpus, solver, name, **flags):
    scenario, card, ops = corpus.scenario(name)
    scenario = scenario.with_flags(**flags)
    return SimContext.for_scenario(scenario, card, ops, solver), scenario


@pytest.mark.integration
def test_locked_withdrawals_never_overdraw(corpus, solver):
    ctx, scenario = load(corpus, solver, "concurrent_withdraw")
    for seed in range(40):
        result = run(ctx, scenario, seed=seed)
        check = check_execution(ctx, result.execution, scenario.invariant, result.state)
        assert check.ok, (seed, check.failures())
        assert global_value(ctx, result.state)["val"] == 3


@pytest.mark.integration
def test_unlocked_withdrawals_can_overdraw(corpus, solver):
    ctx, scenario = load(corpus, solver, "concurrent_withdraw", locking=False)
    finals = set()
    for seed in range(300):
        result = run(ctx, scenario, seed=seed)
        finals.add(global_value(ctx, result.state)["val"])
        if -4 in finals:
            break
    assert -4 in finals


@pytest.mark.integration
def test_ordered_schedule_of_three_replicas(corpus, solver):
    """deposit(100), then withdraw(10), then swithdraw(10)"""
    ctx, scenario = load(corpus, solver, "three_replicas")
    result = run(ctx, scenario)
    values = [v["val"] for v in prefix_values(ctx.card, result.execution)]
    assert values == [0, 100, 90, 80]
    assert check_execution(ctx, result.execution, scenario.invariant, result.state).ok


@pytest.mark.integration
@pytest.mark.parametrize("name", ["deposit_only", "deposit_withdraw"])
def test_accord_effects_are_never_blocked(corpus, solver, name):
    ctx, scenario = load(corpus, solver, name)
    for seed in range(15):
        result = run(ctx, scenario, seed=seed)
        assert result.stats.lock_blocked_emits == 0
        assert result.converged


@pytest.mark.integration
def test_interest_replicas_converge_without_locking_deposits(corpus, solver):
    ctx, scenario = load(corpus, solver, "interest_sec")
    for seed in range(15):
        result = run(ctx, scenario, seed=seed)
        assert result.converged
        assert check_execution(ctx, result.execution, scenario.invariant, result.state).ok
        assert result.stats.locks_by_op.get("deposit", 0) == 0
        assert result.stats.locks_by_op.get("interest", 0) == 0


@pytest.mark.integration
def test_runs_are_reproducible(corpus, solver):
    ctx, scenario = load(corpus, solver, "concurrent_withdraw")
    first = run(ctx, scenario, seed=3)
    second = run(ctx, scenario, seed=3)
    assert first.trace_lines() == second.trace_lines()
    assert first.execution == second.execution


@pytest.mark.integration
def test_step_bound(corpus, solver):
    ctx, scenario = load(corpus, solver, "deposit_withdraw")
    with pytest.raises(NonQuiescenceError):
        run(ctx, scenario, max_steps=2)


@pytest.mark.integration
@pytest.mark.parametrize("name", ["concurrent_withdraw", "deposit_withdraw", "interest_sec"])
def test_unlocked_lamports_follow_local_history(corpus, solver, name):
    ctx, scenario = load(corpus, solver, name, locking=False)
    for seed in range(30):
        result = run(ctx, scenario, seed=seed)
        events = result.state.events
        for event in result.state.history:
            assert event.lamport == 1 + max([events[d].lamport for d in event.deps] + [0]), (seed, event.id)


@pytest.mark.integration
@pytest.mark.parametrize("name", ["concurrent_withdraw", "deposit_withdraw", "interest_sec"])
def test_locked_lamports_exceed_local_history(corpus, solver, name):
    ctx, scenario = load(corpus, solver, name)
    for seed in range(30):
        result = run(ctx, scenario, seed=seed)
        events = result.state.events
        for event in result.state.history:
            assert event.lamport > max([events[d].lamport for d in event.deps] + [0]), (seed, event.id)


@pytest.mark.integration
def test_lock_release_orders_later_emits_after_it(corpus, solver):
    ctx, scenario = load(corpus, solver, "deposit_withdraw")
    result = run(ctx, scenario, script=["LOCK r2", "QUERY r2", "EMIT r2", "EMIT r1"])
    withdrawal, deposit = result.state.history[0], result.state.history[1]
    assert withdrawal.id == "r2@1"
    assert deposit.deps == frozenset()
    assert deposit.id == "r1@2"
    assert [v.id for v in result.state.ordered()] == ["r2@1", "r1@2"]


@pytest.mark.integration
def test_blocked_emits_are_counted_once(corpus, solver):
    """Both withdrawals hold LE and wait on each other until r2 aborts"""
    ctx, scenario = load(corpus, solver, "concurrent_withdraw")
    result = run(ctx, scenario, script=["LOCK r1", "QUERY r1", "LOCK r2", "QUERY r2"])
    assert result.stats.aborts == 1
    assert result.stats.lock_blocked_emits == 2
    assert global_value(ctx, result.state)["val"] == 3


@pytest.mark.integration
@pytest.mark.slow
def test_locked_withdrawals_never_overdraw_over_many_seeds(corpus, solver):
    ctx, scenario = load(corpus, solver, "concurrent_withdraw")
    for seed in range(get_settings().seed_count):
        result = run(ctx, scenario, seed=seed)
        check = check_execution(ctx, result.execution, scenario.invariant, result.state)
        assert check.ok, (seed, check.failures())
        assert global_value(ctx, result.state)["val"] == 3


@pytest.mark.integration
@pytest.mark.slow
def test_unlocked_withdrawals_overdraw_over_many_seeds(corpus, solver):
    ctx, scenario = load(corpus, solver, "concurrent_withdraw", locking=False)
    finals = set()
    for seed in range(get_settings().seed_count):
        finals.add(global_value(ctx, run(ctx, scenario, seed=seed).state)["val"])
    assert finals == {3, -4}


@pytest.mark.integration
@pytest.mark.slow
def test_interest_replicas_converge_over_many_seeds(corpus, solver):
    ctx, scenario = load(corpus, solver, "interest_sec")
    for seed in range(200):
        result = run(ctx, scenario, seed=seed)
        assert result.converged, seed
        assert check_execution(ctx, result.execution, scenario.invariant, result.state).ok, seed


@pytest.mark.integration
@pytest.mark.slow
def test_immediate_accords_miss_chained_conflicts(corpus, solver):
    """An approval seen without its request breaks LE && App? under immediate accords only"""
    ctx, scenario = load(corpus, solver, "joint_chained", ia_only=True)
    leaves = explore(ctx, scenario, depth=16).leaves
    failures = [check_execution(ctx, L, scenario.invariant) for _, L in leaves]
    broken = [c for c in failures if not c.ok]
    assert broken
    assert any(v.condition == GUARD_COMPLIANCE for c in broken for v in c.well_formed)


@pytest.mark.integration
@pytest.mark.slow
def test_transitive_accords_keep_chained_scenario_safe(corpus, solver):
    ctx, scenario = load(corpus, solver, "joint_chained")
    result = explore(ctx, scenario, depth=16)
    assert result.leaves
    for _, L in result.leaves:
        check = check_execution(ctx, L, scenario.invariant)
        assert check.ok, check.failures()
