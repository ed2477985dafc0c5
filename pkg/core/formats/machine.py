"""
Machine-readable output

Line-oriented ``key<TAB>value`` records. A D-execution is written as

    s0      val=0
    event   r1@1    Add(100)        -100
    guard   r2@2/q0 r2@2    LE      r1@1

with one ``guard`` line per active guard (the visible events comma-separated).
Stores are written ``field=value`` joined by ``;``.
"""

from typing import Any, Iterable, List, Mapping, Sequence, Tuple, Union

from core.card.types import Card, StoreValue, render_value
from core.exceptions import ParseError
from core.execution.types import ActiveGuard, DExecution, Event
from core.formats.expr import parse_value
from core.formats.lexer import TokenStream

TAB = "\t"


def format_items(items: Union[Mapping[str, Any], Iterable[Tuple[str, Any]]]) -> str:
    pairs = items.items() if isinstance(items, Mapping) else items
    return "".join(f"{key}{TAB}{_text(value)}\n" for key, value in pairs)


def _text(value: Any) -> str:
    if isinstance(value, (bool, int, tuple)):
        return render_value(value)
    if isinstance(value, (list, frozenset, set)):
        return ",".join(str(v) for v in value)
    return str(value)


def parse_items(text: str) -> List[Tuple[str, str]]:
    items = []
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(TAB)
        items.append((key, value))
    return items


# ---------------------------------------------------------------- stores and effects


def format_store(store: StoreValue) -> str:
    return ";".join(f"{name}={render_value(value)}" for name, value in store.items)


def parse_store(text: str, card: Card, source: str = None) -> StoreValue:
    values = {}
    for part in text.split(";"):
        name, sep, raw = part.partition("=")
        if not sep:
            raise ParseError(f"store entry '{part}' is not field=value", source=source)
        values[name.strip()] = _value(raw, source)
    return StoreValue.of(card.schema, values)


def _value(text: str, source: str = None) -> Any:
    stream = TokenStream(text, source)
    value = parse_value(stream)
    if not stream.at_end():
        raise stream.error(f"unexpected {stream.peek()} after value")
    return value


def parse_instance(text: str, card: Card, source: str = None):
    """``Name`` or ``Name(arg, ...)``"""
    stream = TokenStream(text, source)
    name = stream.ident("an effect name")
    args = []
    if stream.accept("("):
        if not stream.accept(")"):
            args.append(parse_value(stream))
            while stream.accept(","):
                args.append(parse_value(stream))
            stream.expect(")")
    if not stream.at_end():
        raise stream.error(f"unexpected {stream.peek()} after effect")
    try:
        return card.instance(name, *args)
    except KeyError as e:
        raise ParseError(str(e), source=source)


# ---------------------------------------------------------------- executions


def execution_lines(L: DExecution) -> List[str]:
    lines = [f"s0{TAB}{format_store(L.s0)}"]
    for event in L.events:
        lines.append(f"event{TAB}{event.id}{TAB}{event.effect}{TAB}{render_value(event.rval)}")
        for guard in event.guards:
            visible = ",".join(sorted(guard.visible))
            lines.append(f"guard{TAB}{guard.id}{TAB}{event.id}{TAB}{guard.name}{TAB}{visible}")
    return lines


def serialize_execution(L: DExecution) -> str:
    return "\n".join(execution_lines(L)) + "\n"


def parse_execution(lines: Union[str, Sequence[str]], card: Card, source: str = None) -> DExecution:
    if isinstance(lines, str):
        lines = lines.splitlines()
    s0 = None
    events: List[Event] = []
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(TAB)
        kind = fields[0]
        try:
            if kind == "s0":
                s0 = parse_store(fields[1], card, source)
            elif kind == "event":
                _, event_id, effect, rval = fields
                events.append(Event(event_id, parse_instance(effect, card, source), _value(rval, source)))
            elif kind == "guard":
                _, guard_id, owner, names, visible = (fields + [""])[:5]
                if not events or events[-1].id != owner:
                    raise ParseError(
                        f"guard {guard_id} does not follow its event {owner}", source=source, line=number
                    )
                guard = ActiveGuard(
                    guard_id,
                    tuple(n.strip() for n in names.split("&&")),
                    frozenset(v for v in visible.split(",") if v),
                )
                last = events[-1]
                events[-1] = Event(last.id, last.effect, last.rval, last.guards + (guard,))
            else:
                raise ParseError(f"unknown execution record '{kind}'", source=source, line=number)
        except ValueError:
            raise ParseError(f"malformed execution record: {line!r}", source=source, line=number)
    if s0 is None:
        s0 = card.init
    return DExecution(s0, tuple(events))
