"""
Golden fixtures

Per card and guard: the accord set found by the bounded oracle, the
conflicting effect classes and, for each of them, a witness execution. Files
use the ``key<TAB>value`` records; a witness's execution lines are indented
by two spaces and closed by ``end``.

    card    BankAccount
    guard   LE
    accord  NoOp,Add
    conflict        Sub
    status  exhaustive
    witness Sub
      s0    val=0
      event ins     Sub(1)  0
      ...
    end
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

from core.card.types import Card
from core.exceptions import ParseError
from core.execution.types import DExecution
from core.formats.machine import TAB, execution_lines, parse_execution

EXHAUSTIVE = "exhaustive"
BUDGET = "budget"

INSERTED = "ins"
OBSERVER = "eta"


@dataclass(frozen=True)
class Witness:
    """Execution whose ``ins`` event breaks the guard of ``eta``"""
    effect: str
    execution: DExecution


@dataclass(frozen=True)
class GuardFixture:
    guard: str
    accord: Tuple[str, ...]
    conflict: Tuple[str, ...]
    witnesses: Tuple[Witness, ...] = ()
    undetermined: Tuple[str, ...] = ()
    status: str = EXHAUSTIVE

    def witness(self, effect: str) -> Optional[Witness]:
        for witness in self.witnesses:
            if witness.effect == effect:
                return witness
        return None


@dataclass(frozen=True)
class Fixture:
    card: str
    guards: Tuple[GuardFixture, ...] = ()

    def guard(self, name: str) -> GuardFixture:
        for entry in self.guards:
            if entry.guard == name:
                return entry
        raise KeyError(f"fixture for {self.card} has no guard '{name}'")

    @property
    def guard_names(self) -> Tuple[str, ...]:
        return tuple(g.guard for g in self.guards)


def _names(text: str) -> Tuple[str, ...]:
    return tuple(n for n in text.split(",") if n)


def serialize_fixture(fixture: Fixture) -> str:
    lines = [f"card{TAB}{fixture.card}"]
    for entry in fixture.guards:
        lines.append(f"guard{TAB}{entry.guard}")
        lines.append(f"accord{TAB}{','.join(entry.accord)}")
        lines.append(f"conflict{TAB}{','.join(entry.conflict)}")
        if entry.undetermined:
            lines.append(f"undetermined{TAB}{','.join(entry.undetermined)}")
        lines.append(f"status{TAB}{entry.status}")
        for witness in entry.witnesses:
            lines.append(f"witness{TAB}{witness.effect}")
            lines.extend(f"  {line}" for line in execution_lines(witness.execution))
            lines.append("end")
    return "\n".join(lines) + "\n"


def parse_fixture(text: str, card: Card, source: Optional[str] = None) -> Fixture:
    card_name = None
    entries: List[GuardFixture] = []
    current: Optional[dict] = None
    witness_effect: Optional[str] = None
    witness_lines: List[str] = []

    def close() -> None:
        if current is not None:
            entries.append(GuardFixture(**current))

    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if witness_effect is not None:
            if raw.strip() == "end":
                execution = parse_execution(witness_lines, card, source)
                current["witnesses"] = current["witnesses"] + (Witness(witness_effect, execution),)
                witness_effect, witness_lines = None, []
            else:
                witness_lines.append(raw.strip())
            continue
        key, _, value = raw.partition(TAB)
        if key == "card":
            card_name = value
        elif key == "guard":
            close()
            current = {"guard": value, "accord": (), "conflict": (), "witnesses": ()}
        elif current is None:
            raise ParseError(f"'{key}' before the first guard", source=source, line=number)
        elif key in ("accord", "conflict", "undetermined"):
            current[key] = _names(value)
        elif key == "status":
            current["status"] = value
        elif key == "witness":
            witness_effect = value
        else:
            raise ParseError(f"unknown fixture record '{key}'", source=source, line=number)
    if witness_effect is not None:
        raise ParseError(f"witness for {witness_effect} is not closed by 'end'", source=source)
    close()
    if card_name is None:
        raise ParseError("fixture does not name its card", source=source)
    return Fixture(card_name, tuple(entries))


def read_fixture(path: Union[str, Path], card: Card) -> Fixture:
    path = Path(path)
    return parse_fixture(path.read_text(encoding="utf-8"), card, source=str(path))


def write_fixture(path: Union[str, Path], fixture: Fixture) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_fixture(fixture), encoding="utf-8")
