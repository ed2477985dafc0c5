"""
Scenario files

    scenario ConcurrentWithdraw {
      card bank_account;
      ops bank_account;
      init { val = 10 }
      invariant s >= 0;
      seed 7;
      locking on;
      accords tas;
      policy random;
      replica r1 { withdraw(7); }
      replica r2 { withdraw(7); }
    }

``card`` and ``ops`` name files next to the scenario file (``.card`` and
``.ops`` are appended); ``ops`` defaults to the card's file name.
"""

from typing import Callable, List, Optional

from core.card.types import Card, render_value
from core.exceptions import ParseError
from core.formats.expr import LogicScope, parse_expr, parse_value
from core.formats.lexer import TokenStream
from core.logic.types import PRE
from core.replica_sim.types import ORDERED, RANDOM, Invocation, ReplicaScript, Scenario

CardLoader = Callable[[str], Card]

_SWITCHES = {"on": True, "off": False}
_ACCORDS = {"tas": False, "ia": True}
_POLICIES = (RANDOM, ORDERED)


class ScenarioParser:
    def __init__(self, text: str, source: Optional[str] = None, load_card: Optional[CardLoader] = None):
        self.stream = TokenStream(text, source)
        self.source = source
        self.load_card = load_card

    def parse(self) -> Scenario:
        stream = self.stream
        stream.expect("scenario")
        name = stream.ident("a scenario name") if not stream.at("{") else self._default_name()
        stream.expect("{")
        fields = {"name": name}
        replicas: List[ReplicaScript] = []
        invariant_expr = None
        while not stream.accept("}"):
            token = stream.peek()
            keyword = stream.ident("a scenario entry")
            if keyword in ("card", "ops"):
                fields[keyword] = stream.ident(f"a {keyword} file name")
            elif keyword == "init":
                fields["init"] = self._init()
                stream.accept(";")
                continue
            elif keyword == "invariant":
                invariant_expr = parse_expr(stream)
            elif keyword == "seed":
                fields["seed"] = stream.integer()
            elif keyword == "locking":
                fields["locking"] = self._choice(_SWITCHES, "on or off")
            elif keyword == "accords":
                fields["ia_only"] = self._choice(_ACCORDS, "tas or ia")
            elif keyword == "policy":
                fields["policy"] = self._choice({p: p for p in _POLICIES}, "random or ordered")
            elif keyword == "replica":
                replicas.append(self._replica(replicas))
                continue
            else:
                raise stream.error(f"unknown scenario entry '{keyword}'", token)
            stream.expect(";")
        if not stream.at_end():
            raise stream.error(f"unexpected {stream.peek()} after scenario")
        if "card" not in fields:
            raise ParseError(f"scenario {name} does not name its card file", source=self.source)
        if "ops" not in fields:
            fields["ops"] = fields["card"]
        if invariant_expr is not None:
            if self.load_card is None:
                raise ParseError("an invariant needs the scenario's card to be loaded", source=self.source)
            card = self.load_card(fields["card"])
            scope = LogicScope(card.schema, (PRE,), {}, None, self.source)
            fields["invariant"] = scope.formula(invariant_expr)
        return Scenario(replicas=tuple(replicas), **fields)

    def _default_name(self) -> str:
        if self.source is None:
            return "scenario"
        stem = self.source.replace("\\", "/").rsplit("/", 1)[-1]
        return stem.split(".", 1)[0]

    def _choice(self, options: dict, expected: str):
        token = self.stream.peek()
        word = self.stream.ident(expected)
        if word not in options:
            raise self.stream.error(f"expected {expected}, found '{word}'", token)
        return options[word]

    def _init(self):
        stream = self.stream
        stream.expect("{")
        values = []
        while not stream.accept("}"):
            field_name = stream.ident("a field name")
            stream.expect("=")
            values.append((field_name, parse_value(stream)))
            stream.accept(";") or stream.accept(",")
        return tuple(values)

    def _replica(self, existing: List[ReplicaScript]) -> ReplicaScript:
        stream = self.stream
        token = stream.peek()
        name = stream.ident("a replica name")
        if any(r.name == name for r in existing):
            raise stream.error(f"replica '{name}' is declared twice", token)
        stream.expect("{")
        invocations = []
        while not stream.accept("}"):
            op = stream.ident("an operation name")
            args = []
            stream.expect("(")
            if not stream.accept(")"):
                args.append(parse_value(stream))
                while stream.accept(","):
                    args.append(parse_value(stream))
                stream.expect(")")
            stream.expect(";")
            invocations.append(Invocation(op, tuple(args)))
        return ReplicaScript(name, tuple(invocations))


def parse_scenario(
    text: str, source: Optional[str] = None, load_card: Optional[CardLoader] = None
) -> Scenario:
    """
    Parse a scenario file. ``load_card`` resolves the card reference and is
    required when the scenario declares an invariant.
    """
    return ScenarioParser(text, source, load_card).parse()


def serialize_scenario(scenario: Scenario) -> str:
    lines = [f"scenario {scenario.name} {{", f"  card {scenario.card};", f"  ops {scenario.ops};"]
    if scenario.init:
        body = "; ".join(f"{name} = {render_value(value)}" for name, value in scenario.init)
        lines.append(f"  init {{ {body} }}")
    if scenario.invariant is not None:
        lines.append(f"  invariant {scenario.invariant};")
    lines.append(f"  seed {scenario.seed};")
    lines.append(f"  locking {'on' if scenario.locking else 'off'};")
    lines.append(f"  accords {'ia' if scenario.ia_only else 'tas'};")
    lines.append(f"  policy {scenario.policy};")
    for replica in scenario.replicas:
        calls = " ".join(f"{invocation};" for invocation in replica.invocations)
        lines.append(
            f"  replica {replica.name} {{ {calls} }}" if calls else f"  replica {replica.name} {{ }}"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
