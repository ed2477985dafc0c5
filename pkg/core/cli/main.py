"""
cardkit command line

    cardkit infer corpus/bank_account.card
    cardkit typecheck bank_account bank_account.ops
    cardkit simulate corpus/concurrent_withdraw.scenario --seeds 1000
    cardkit bench
    cardkit fixtures --only fsm

Command output goes to stdout (``--machine`` switches to ``key<TAB>value``
records); logs go to stderr. Exit codes: 2 parse or card validation error,
3 solver failure, 4 invalid verification condition, 5 failed check,
6 simulation not quiescent, 1 any other error.
"""

import sys
import time
from functools import wraps
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import click

from core.card.semantics import validate_card
from core.card.types import Card
from core.corpus.fixtures import read_fixture, write_fixture
from core.corpus.oracle import build_fixtures, fixture_path, replays
from core.corpus.registry import BENCHMARK_APPLICATIONS, CARD_SUFFIX, Corpus, load_scenario, read_card
from core.exceptions import (
    CardkitError,
    CardValidationError,
    NonQuiescenceError,
    ParseError,
    SolverError,
)
from core.formats.machine import format_items, format_store, serialize_execution
from core.inference.accord import AccordReport, ia_report, tas_fixed_point
from core.lambdaq.syntax import OpDef
from core.lambdaq.typechecker import VCResult, discharge, dump_vcs, typecheck_op, verdict_of
from core.logic.solvers import ValidityBackend, make_backend
from core.replica_sim.extraction import check_execution, global_value
from core.replica_sim.rules import SimContext
from core.replica_sim.scheduler import explore, run
from core.replica_sim.types import Scenario
from shared.config.settings import get_settings, override_settings
from shared.utils.logger import get_logger, setup_logging

logger = get_logger("cli")

EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_INVALID = 4
EXIT_CHECK = 5
EXIT_NONQUIESCENT = 6


class CheckFailed(Exception):
    """A command ran to completion but one of its checks failed"""

    def __init__(self, message: str, code: int = EXIT_CHECK):
        super().__init__(message)
        self.code = code


def exit_code_for(error: Exception) -> int:
    if isinstance(error, CheckFailed):
        return error.code
    if isinstance(error, (ParseError, CardValidationError)):
        return EXIT_PARSE
    if isinstance(error, SolverError):
        return EXIT_SOLVER
    if isinstance(error, NonQuiescenceError):
        return EXIT_NONQUIESCENT
    return EXIT_ERROR


def handles_errors(command):
    """Report toolkit errors on stderr and exit with their code"""

    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (CardkitError, CheckFailed) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(exit_code_for(e))

    return wrapper


# ---------------------------------------------------------------- loading


def load_card(reference: str, backend: Optional[ValidityBackend] = None) -> Card:
    """
    A card by path, or by name under the corpus directory. With a backend the
    card is also validated.
    """
    path = Path(reference)
    if path.suffix == CARD_SUFFIX or path.exists():
        card = read_card(path)
    else:
        try:
            card = Corpus().card(reference)
        except KeyError as e:
            raise ParseError(str(e), source=reference)
    if backend is not None:
        violations = validate_card(card, backend)
        if violations:
            raise CardValidationError(
                f"card {card.name} is invalid: {'; '.join(violations)}", violations=violations
            )
    return card


def load_ops(reference: str, card: Card) -> Dict[str, OpDef]:
    """Operations by path, or by name under the corpus directory"""
    path = Path(reference)
    if path.exists():
        return Corpus(path.parent).ops(path.name, card)
    return Corpus().ops(reference, card)


def _names(values: Iterable[str]) -> str:
    return ", ".join(values) or "-"


def _guard_list(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split("&&") if part.strip())


# ---------------------------------------------------------------- group


@click.group()
@click.option(
    "--solver", default=None,
    help="SMT-LIB2 solver command (default: z3 on PATH, then the z3 binding)",
)
@click.option(
    "--backend", type=click.Choice(["solver", "enumeration"]), default=None,
    help="Validity backend",
)
@click.option("--max-iter", type=int, default=None, help="Fixed-point iteration bound")
@click.option("--log-level", default=None, help="TRACE, DEBUG, INFO, WARNING or ERROR")
@click.option("--log-format", type=click.Choice(["console", "json"]), default=None)
@click.option("--log-file", default=None, help="Also write logs to this file")
def cli(solver, backend, max_iter, log_level, log_format, log_file):
    """Conflict-aware replicated data types: inference, type checking and simulation"""
    override_settings(
        solver=solver,
        backend=backend,
        max_iter=max_iter,
        log_level=log_level,
        log_format=log_format,
        log_file=log_file,
    )
    setup_logging()


# ---------------------------------------------------------------- infer


def _report_items(report: AccordReport, timings: bool) -> List[Tuple[str, object]]:
    items = [
        ("guard", report.guard),
        ("accord", list(report.accord)),
        ("conflict", list(report.conflict)),
        ("invariant", report.invariant_used),
        ("iterations", report.iterations),
        ("status", report.status.value),
    ]
    for effect, refined in sorted(report.index_conflicts.items()):
        for param, values in sorted(refined.items()):
            items.append(("refined", f"{effect}:{param}={','.join(str(v) for v in sorted(values))}"))
    if timings:
        items.append(("elapsed_ms", f"{report.elapsed_ms:.0f}"))
    return items


def _echo_report(report: AccordReport) -> None:
    click.echo(f"guard {report.guard}")
    click.echo(f"  accord      {_names(report.accord)}")
    click.echo(f"  conflict    {_names(report.conflict)}")
    click.echo(f"  invariant   {report.invariant_used}")
    click.echo(f"  iterations  {report.iterations} ({report.status.value}, {report.elapsed_ms:.0f} ms)")
    for effect, refined in sorted(report.index_conflicts.items()):
        for param, values in sorted(refined.items()):
            click.echo(f"  refined     {effect} conflicts only for {param} in {sorted(values)}")


@cli.command()
@click.argument("card_file")
@click.option(
    "--guard", "guards", multiple=True,
    help="Also infer a conjunction such as 'LE && App?'",
)
@click.option("--ia-only", is_flag=True, help="Immediate accords only, no fixed point")
@click.option("--machine", is_flag=True, help="key<TAB>value output")
@click.option("--timings", is_flag=True, help="Include wall-clock times in machine output")
@handles_errors
def infer(card_file, guards, ia_only, machine, timings):
    """Conflict table of a card: accord and conflict set of every guard"""
    settings = get_settings()
    backend = make_backend(settings)
    card = load_card(card_file, backend)

    targets = [card.guard(name) for name in card.guard_names]
    for text in guards:
        names = _guard_list(text)
        unknown = [n for n in names if n not in card.guard_names]
        if unknown:
            raise ParseError(f"card {card.name} has no guards {unknown}", source=card_file)
        targets.append(card.conjunction(names))
    reports = []
    for guard in targets:
        if ia_only:
            reports.append(ia_report(card, guard, backend))
        else:
            reports.append(tas_fixed_point(card, guard, backend, settings.max_iter))

    if machine:
        items: List[Tuple[str, object]] = [("card", card.name)]
        for report in reports:
            items += _report_items(report, timings)
        click.echo(format_items(items), nl=False)
        return
    click.echo(f"card {card.name}: {len(card.guards)} guards, {len(card.effects)} effect classes")
    for report in reports:
        _echo_report(report)


# ---------------------------------------------------------------- typecheck


def check_ops(
    card: Card, ops: Dict[str, OpDef], backend: ValidityBackend, names: Optional[Sequence[str]] = None
) -> Dict[str, List[VCResult]]:
    """Discharged VCs per operation, in file order"""
    selected = [n for n in ops if names is None or n in names]
    return {name: discharge(typecheck_op(card, ops[name]), backend) for name in selected}


@cli.command()
@click.argument("card_file")
@click.argument("ops_file")
@click.option("--op", "only", multiple=True, help="Check only these operations")
@click.option(
    "--dump-vcs", "dump_dir", type=click.Path(file_okay=False), default=None,
    help="Write every VC as SMT-LIB2",
)
@click.option("--machine", is_flag=True, help="key<TAB>value output")
@handles_errors
def typecheck(card_file, ops_file, only, dump_dir, machine):
    """Refinement type checking of operations against their event specifications"""
    backend = make_backend()
    card = load_card(card_file, backend)
    ops = load_ops(ops_file, card)
    unknown = [name for name in only if name not in ops]
    if unknown:
        raise ParseError(f"no operations named {unknown} in {ops_file}", source=ops_file)
    results = check_ops(card, ops, backend, only or None)

    invalid = []
    items: List[Tuple[str, object]] = []
    for name, vc_results in results.items():
        verdict = verdict_of(vc_results)
        if dump_dir:
            dump_vcs([r.vc for r in vc_results], dump_dir, prefix=name)
        if verdict == "invalid":
            invalid.append(name)
        if machine:
            items += [("op", name), ("verdict", verdict), ("vcs", len(vc_results))]
            for r in vc_results:
                if r.result.is_invalid:
                    witness = ",".join(f"{k}={v}" for k, v in sorted((r.result.witness or {}).items()))
                    items.append(("invalid", f"{r.vc.origin}\t{witness}"))
            continue
        click.echo(f"{name}: {verdict} ({len(vc_results)} VCs)")
        for r in vc_results:
            if r.result.is_invalid:
                click.echo(f"  invalid {r.vc}")
                click.echo(f"    witness {r.result.witness or {}}")
            elif r.result.is_unknown:
                click.echo(f"  unknown {r.vc.origin}: {r.result.reason}")
    if machine:
        click.echo(format_items(items), nl=False)
    if invalid:
        raise CheckFailed(f"invalid operations: {', '.join(invalid)}", EXIT_INVALID)


# ---------------------------------------------------------------- simulate


def _used_ops(scenario: Scenario) -> List[str]:
    names: List[str] = []
    for script in scenario.replicas:
        for invocation in script.invocations:
            if invocation.op not in names:
                names.append(invocation.op)
    return names


def _simulate_seeds(ctx, scenario, seeds, max_steps, machine, show_trace) -> int:
    failures = 0
    locks = blocked = aborts = 0
    items: List[Tuple[str, object]] = []
    for seed in seeds:
        result = run(ctx, scenario, seed=seed, max_steps=max_steps)
        check = check_execution(ctx, result.execution, scenario.invariant, result.state)
        final = global_value(ctx, result.state)
        locks += result.stats.lock_acquisitions
        blocked += result.stats.lock_blocked_emits
        aborts += result.stats.aborts
        if len(seeds) == 1:
            if machine:
                click.echo("".join(f"{line}\n" for line in result.trace_lines()), nl=False)
                click.echo(serialize_execution(result.execution), nl=False)
                items += [("final", format_store(final))] + list(result.stats.as_items().items())
            else:
                if show_trace:
                    for line in result.trace_lines():
                        click.echo(line)
                click.echo(serialize_execution(result.execution), nl=False)
                click.echo(f"final {final} after {result.stats.steps} steps")
        if not check.ok:
            failures += 1
            if machine:
                items += [("failed_seed", seed), ("final_of_failed", format_store(final))]
                items += [("failure", message) for message in check.failures()]
            else:
                click.echo(f"seed {seed}: final {final}")
                for message in check.failures():
                    click.echo(f"  {message}")
    summary = [
        ("runs", len(seeds)),
        ("failures", failures),
        ("lock_acquisitions", locks),
        ("lock_blocked_emits", blocked),
        ("aborts", aborts),
    ]
    if machine:
        click.echo(format_items(items + summary), nl=False)
    else:
        click.echo(", ".join(f"{key} {value}" for key, value in summary))
    return failures


def _explore(ctx, scenario, depth, machine) -> int:
    result = explore(ctx, scenario, depth)
    failures = 0
    first = None
    for path, execution in result.leaves:
        check = check_execution(ctx, execution, scenario.invariant)
        if not check.ok:
            failures += 1
            if first is None:
                first = (path, execution, check)
    summary = [
        ("states", result.states),
        ("leaves", len(result.leaves)),
        ("truncated", result.truncated),
        ("failing_leaves", failures),
    ]
    if first is not None:
        path, execution, check = first
        if machine:
            click.echo("".join(f"STEP {n} {a}\n" for n, a in enumerate(path)), nl=False)
        else:
            click.echo("first failing interleaving:")
            for n, action in enumerate(path):
                click.echo(f"STEP {n} {action}")
        click.echo(serialize_execution(execution), nl=False)
        for message in check.failures():
            click.echo(f"failure\t{message}" if machine else f"  {message}")
    if machine:
        click.echo(format_items(summary), nl=False)
    else:
        click.echo(", ".join(f"{key} {value}" for key, value in summary))
    return failures


@cli.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Scheduler seed (default: the scenario's)")
@click.option("--seeds", type=int, default=None, help="Run this many consecutive seeds")
@click.option("--no-locks", is_flag=True, help="Disable the locking protocol")
@click.option(
    "--ia-only", is_flag=True,
    help="Lock by immediate accords instead of transitive ones",
)
@click.option(
    "--max-steps", type=int, default=None,
    help="Step bound before a run counts as not quiescent",
)
@click.option(
    "--explore-depth", type=int, default=None,
    help="Explore every interleaving up to this depth",
)
@click.option("--trace", "show_trace", is_flag=True, help="Print the trace of a single run")
@click.option("--machine", is_flag=True, help="key<TAB>value output")
@handles_errors
def simulate(scenario_file, seed, seeds, no_locks, ia_only, max_steps, explore_depth, show_trace, machine):
    """Run a scenario on the simulated replica network and check what it produced"""
    settings = get_settings()
    scenario, card, ops = load_scenario(scenario_file)
    scenario = scenario.with_flags(locking=False if no_locks else None, ia_only=True if ia_only else None)
    backend = make_backend(settings)

    used = _used_ops(scenario)
    missing = [name for name in used if name not in ops]
    if missing:
        raise ParseError(f"scenario uses undefined operations {missing}", source=scenario_file)
    results = check_ops(card, ops, backend, used)
    invalid = [name for name, found in results.items() if verdict_of(found) == "invalid"]
    if invalid:
        raise CheckFailed(f"operations do not typecheck: {', '.join(invalid)}", EXIT_INVALID)

    ctx = SimContext.for_scenario(scenario, card, ops, backend, settings.max_iter, settings.backoff_base)
    started = time.perf_counter()
    if explore_depth is not None:
        failures = _explore(ctx, scenario, explore_depth, machine)
    else:
        first = scenario.seed if seed is None else seed
        count = seeds or 1
        failures = _simulate_seeds(
            ctx,
            scenario,
            list(range(first, first + count)),
            max_steps or settings.max_steps,
            machine,
            show_trace,
        )
    logger.info(f"{scenario.name}: done in {(time.perf_counter() - started):.1f} s")
    if failures:
        raise CheckFailed(f"{failures} checked execution(s) failed")


# ---------------------------------------------------------------- bench


@cli.command()
@click.option(
    "--corpus", "corpus_dir", type=click.Path(file_okay=False), default=None,
    help="Corpus directory",
)
@click.option("--machine", is_flag=True, help="key<TAB>value output")
@click.option("--timings", is_flag=True, help="Include wall-clock times in machine output")
@handles_errors
def bench(corpus_dir, machine, timings):
    """Conflict inference on the benchmark applications, compared with the fixtures"""
    settings = get_settings()
    backend = make_backend(settings)
    corpus = Corpus(corpus_dir)
    mismatches = []
    items: List[Tuple[str, object]] = []
    if not machine:
        click.echo(f"{'Application':<28}{'Guards':>7}{'Effects':>9}{'ms':>8}{'slowest':>9}  Fixture")
    for app in BENCHMARK_APPLICATIONS:
        card = corpus.card(app.name)
        started = time.perf_counter()
        reports = {g.name: tas_fixed_point(card, g, backend, settings.max_iter) for g in card.guards}
        elapsed = (time.perf_counter() - started) * 1000
        slowest = max(r.elapsed_ms for r in reports.values())
        match = _fixture_matches(card, reports, fixture_path(app.name, corpus.root / "fixtures"))
        counts = len(card.guards) == app.guards and len(card.effects) == app.effects
        if not (match and counts):
            mismatches.append(app.title)
        if machine:
            items += [
                ("app", app.name),
                ("guards", len(card.guards)),
                ("effects", len(card.effects)),
                ("fixture_match", match),
            ]
            if timings:
                items += [("ms", f"{elapsed:.0f}"), ("slowest_guard_ms", f"{slowest:.0f}")]
        else:
            click.echo(
                f"{app.title:<28}{len(card.guards):>7}{len(card.effects):>9}{elapsed:>8.0f}{slowest:>9.0f}  "
                f"{'yes' if match else 'NO'}"
            )
    if machine:
        click.echo(format_items(items), nl=False)
    if mismatches:
        raise CheckFailed(f"mismatch for {', '.join(mismatches)}")


def _fixture_matches(card: Card, reports: Dict[str, AccordReport], path: Path) -> bool:
    if not path.exists():
        logger.warning(f"no fixture for {card.name} at {path}")
        return False
    fixture = read_fixture(path, card)
    if set(fixture.guard_names) != set(reports):
        return False
    for entry in fixture.guards:
        report = reports[entry.guard]
        decided = set(card.effect_names) - set(entry.undetermined)
        if set(report.accord) & decided != set(entry.accord):
            logger.warning(f"{card.name}/{entry.guard}: inferred {report.accord}, fixture {entry.accord}")
            return False
    return True


# ---------------------------------------------------------------- fixtures


@cli.command()
@click.option(
    "--corpus", "corpus_dir", type=click.Path(file_okay=False), default=None,
    help="Corpus directory",
)
@click.option(
    "--out", "out_dir", type=click.Path(file_okay=False), default=None,
    help="Output directory",
)
@click.option("--only", multiple=True, help="Only these applications")
@click.option("--workers", type=int, default=1, help="Cards searched in parallel")
@handles_errors
def fixtures(corpus_dir, out_dir, only, workers):
    """Rebuild the golden accord fixtures with the bounded oracle"""
    corpus = Corpus(corpus_dir)
    built = build_fixtures(corpus, only or None, workers)
    target = Path(out_dir) if out_dir else corpus.root / "fixtures"
    broken = []
    for name, fixture in built.items():
        card = corpus.card(name)
        for entry in fixture.guards:
            broken += [f"{name}/{entry.guard}/{w.effect}" for w in entry.witnesses if not replays(card, w)]
        path = fixture_path(name, target)
        write_fixture(path, fixture)
        click.echo(f"{path}")
    if broken:
        raise CheckFailed(f"witnesses that do not replay: {', '.join(broken)}")


if __name__ == "__main__":
    cli()
