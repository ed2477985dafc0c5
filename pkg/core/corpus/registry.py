"""
Corpus registry

Cards, operations and scenarios live as text files under ``corpus/``. The
benchmark table lists the six applications with their expected guard and
effect-class counts.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from core.card.types import Card
from core.exceptions import CardkitError, ParseError
from core.formats.card_parser import parse_card
from core.formats.ops_parser import parse_ops
from core.formats.scenario_parser import parse_scenario
from core.lambdaq.syntax import OpDef
from core.replica_sim.types import Scenario
from shared.utils.logger import get_logger

logger = get_logger("corpus")

CORPUS_DIR = Path(__file__).resolve().parents[2] / "corpus"
FIXTURE_DIR = CORPUS_DIR / "fixtures"

CARD_SUFFIX = ".card"
OPS_SUFFIX = ".ops"
SCENARIO_SUFFIX = ".scenario"
FIXTURE_SUFFIX = ".fixture"


@dataclass(frozen=True)
class BenchmarkApplication:
    """A row of the benchmark table"""
    title: str
    name: str
    guards: int
    effects: int
    ops: Optional[str] = None
    oracle_prefix: int = 2


BENCHMARK_APPLICATIONS: Tuple[BenchmarkApplication, ...] = (
    BenchmarkApplication("Bank account", "bank_account", 4, 3, ops="bank_account"),
    BenchmarkApplication("Bank account with reset", "bank_reset", 4, 4),
    BenchmarkApplication("Conspiring booleans (2)", "conspiring_booleans", 4, 3),
    BenchmarkApplication("Joint bank account", "joint_account", 6, 8, ops="joint_account"),
    BenchmarkApplication(
        "KV bank accounts (10)", "kv_accounts", 13, 3, ops="kv_accounts", oracle_prefix=1
    ),
    BenchmarkApplication("State machine (3 states)", "fsm", 3, 3, ops="fsm"),
)


def benchmark(name: str) -> BenchmarkApplication:
    for app in BENCHMARK_APPLICATIONS:
        if app.name == name:
            return app
    raise KeyError(f"'{name}' is not a benchmark application")


@dataclass
class Application:
    card: Card
    ops: Dict[str, OpDef] = field(default_factory=dict)
    source: Optional[Path] = None


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError("file not found", source=str(path))


def read_card(path: Union[str, Path]) -> Card:
    path = Path(path)
    card = parse_card(_read(path), source=str(path))
    logger.debug(f"loaded card {card.name} from {path}")
    return card


class Corpus:
    """
    A directory of corpus files. Cards are cached by file stem and looked up
    by card name when an operations file names them.
    """

    def __init__(self, root: Union[str, Path, None] = None):
        self.root = Path(root) if root is not None else CORPUS_DIR
        self._cards: Dict[str, Card] = {}

    def path(self, name: str, suffix: str) -> Path:
        candidate = Path(name)
        if candidate.suffix == suffix:
            return candidate if candidate.is_absolute() else self.root / candidate
        return self.root / f"{name}{suffix}"

    def card(self, name: str) -> Card:
        """Card stored in ``<name>.card``"""
        if name not in self._cards:
            self._cards[name] = read_card(self.path(name, CARD_SUFFIX))
        return self._cards[name]

    def card_named(self, card_name: str) -> Card:
        """Card whose declared name is ``card_name``"""
        for card in self._cards.values():
            if card.name == card_name:
                return card
        for path in sorted(self.root.glob(f"*{CARD_SUFFIX}")):
            card = self.card(path.stem)
            if card.name == card_name:
                return card
        raise KeyError(f"no card named {card_name} under {self.root}")

    def ops(self, name: str, card: Optional[Card] = None) -> Dict[str, OpDef]:
        path = self.path(name, OPS_SUFFIX)

        def resolve(card_name: str) -> Card:
            if card is not None and card.name == card_name:
                return card
            return self.card_named(card_name)

        return {op.name: op for op in parse_ops(_read(path), resolve, source=str(path))}

    def scenario(self, name: str) -> Tuple[Scenario, Card, Dict[str, OpDef]]:
        """A scenario with its card and operations, resolved next to the scenario file"""
        path = self.path(name, SCENARIO_SUFFIX)
        local = self if path.parent == self.root else Corpus(path.parent)
        scenario = parse_scenario(_read(path), source=str(path), load_card=local.card)
        card = local.card(scenario.card)
        return scenario, card, local.ops(scenario.ops, card)

    def application(self, name: str) -> Application:
        card = self.card(name)
        ops: Dict[str, OpDef] = {}
        try:
            app = benchmark(name)
            ops_name = app.ops
        except KeyError:
            ops_name = name if self.path(name, OPS_SUFFIX).exists() else None
        if ops_name is not None:
            ops = self.ops(ops_name, card)
        return Application(card, ops, self.path(name, CARD_SUFFIX))

    def scenario_names(self) -> List[str]:
        return sorted(p.stem for p in self.root.glob(f"*{SCENARIO_SUFFIX}"))


def load_application(name: str, root: Union[str, Path, None] = None) -> Application:
    """Card and operations of a corpus application by file stem"""
    try:
        return Corpus(root).application(name)
    except CardkitError:
        raise
    except KeyError as e:
        raise CardkitError(str(e))


def load_scenario(path: Union[str, Path]) -> Tuple[Scenario, Card, Dict[str, OpDef]]:
    """Scenario file at ``path`` with the card and operations it names"""
    path = Path(path)
    return Corpus(path.parent).scenario(path.name)
