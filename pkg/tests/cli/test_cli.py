"""
Command line: output formats and exit codes.
"""

import pytest
from click.testing import CliRunner

from core.cli import cli
from core.cli.main import EXIT_CHECK, EXIT_INVALID, EXIT_NONQUIESCENT, EXIT_PARSE
from core.corpus import CORPUS_DIR
from core.formats import parse_items

QUIET = ["--log-level", "ERROR"]

FLIPPED_OPS = """
op withdraw(n: {v: int | v >= 0}) : Op(BankAccount, int, (s >= 0 => s' >= 0) && a == s - s') =
  query LE as x in
    if x <= n then emit (Sub(n), n) else emit (NoOp, 0)
"""


@pytest.fixture
def invoke():
    runner = CliRunner()

    def call(*args):
        return runner.invoke(cli, QUIET + list(args))

    return call


def scenario(name):
    return str(CORPUS_DIR / f"{name}.scenario")


@pytest.mark.unit
def test_infer_machine_output(invoke):
    result = invoke("--backend", "enumeration", "infer", "bank_account", "--machine")
    assert result.exit_code == 0, result.output
    items = parse_items(result.output)
    assert ("card", "BankAccount") in items
    le = [key_value for key_value in items if key_value[0] in ("guard", "accord")]
    assert ("guard", "LE") in le
    assert le[le.index(("guard", "LE")) + 1] == ("accord", "NoOp,Add")
    assert not any(key == "elapsed_ms" for key, _ in items)


@pytest.mark.unit
def test_infer_conjunction_and_unknown_guard(invoke):
    result = invoke("--backend", "enumeration", "infer", "bank_account", "--guard", "LE && GE")
    assert result.exit_code == 0, result.output
    assert "guard LE && GE" in result.output

    result = invoke("--backend", "enumeration", "infer", "bank_account", "--guard", "LE && Nope")
    assert result.exit_code == EXIT_PARSE


@pytest.mark.unit
def test_missing_card_file(invoke, tmp_path):
    result = invoke("--backend", "enumeration", "infer", str(tmp_path / "missing.card"))
    assert result.exit_code == EXIT_PARSE
    assert "error:" in result.output


@pytest.mark.integration
def test_typecheck_corpus_operations(invoke, solver):
    result = invoke("typecheck", "bank_account", "bank_account", "--machine")
    assert result.exit_code == 0, result.output
    verdicts = [value for key, value in parse_items(result.output) if key == "verdict"]
    assert verdicts == ["valid", "valid", "valid"]


@pytest.mark.integration
def test_typecheck_rejects_flipped_comparison(invoke, solver, tmp_path):
    ops = tmp_path / "flipped.ops"
    ops.write_text(FLIPPED_OPS, encoding="utf-8")
    dump = tmp_path / "vcs"
    result = invoke("typecheck", "bank_account", str(ops), "--dump-vcs", str(dump))
    assert result.exit_code == EXIT_INVALID
    assert "witness" in result.output
    assert list(dump.glob("withdraw_*.smt2"))


@pytest.mark.integration
def test_simulate_with_and_without_locks(invoke, solver):
    safe = invoke("simulate", scenario("concurrent_withdraw"), "--seeds", "20")
    assert safe.exit_code == 0, safe.output
    assert "failures 0" in safe.output

    unsafe = invoke("simulate", scenario("concurrent_withdraw"), "--no-locks", "--seeds", "300", "--machine")
    assert unsafe.exit_code == EXIT_CHECK
    items = parse_items(unsafe.output)
    assert ("final_of_failed", "val=-4") in items


@pytest.mark.integration
def test_simulate_single_run_prints_the_execution(invoke, solver):
    result = invoke("simulate", scenario("three_replicas"), "--trace")
    assert result.exit_code == 0, result.output
    assert "s0\tval=0" in result.output
    assert "final 80 after" in result.output


@pytest.mark.integration
def test_simulate_step_bound(invoke, solver):
    result = invoke("simulate", scenario("deposit_withdraw"), "--max-steps", "2")
    assert result.exit_code == EXIT_NONQUIESCENT


@pytest.mark.integration
@pytest.mark.slow
def test_bench_matches_fixtures(invoke, solver):
    result = invoke("bench", "--machine")
    assert result.exit_code == 0, result.output
    matches = [value for key, value in parse_items(result.output) if key == "fixture_match"]
    assert matches == ["true"] * 6


@pytest.mark.integration
def test_fixtures_command_writes_replaying_witnesses(invoke, solver, tmp_path):
    result = invoke("fixtures", "--only", "fsm", "--out", str(tmp_path))
    assert result.exit_code == 0, result.output
    assert (tmp_path / "fsm.fixture").exists()
