"""
Card files

    card Counter {
      store { val: int }
      init { val = 0 }
      effect Add(n: int where n >= 0) { val := s.val + n }
      effect Sub(i: index[10], n: int where n >= 0) { accts[i] := s.accts[i] - n }
      effect SubReset = Sub then Reset
      guard LE := r.val <= g.val
    }

Assignments read the old store as ``s.f`` or bare ``f``; ``f[i] := t``
updates one array cell. ``sum(g.f)`` sums a fixed-length array and ``<=>``
is a two-way implication. NoOp, Top and EQ are added when not declared.
"""

from typing import Dict, List, Optional, Tuple

from core.card.semantics import compose_effects
from core.card.types import NOOP, TOP, Card, EffectClass, GuardDef, Param, identity_guard, render_value
from core.exceptions import CardkitError
from core.formats.expr import LogicScope, parse_expr, parse_sort, parse_value
from core.formats.lexer import TokenStream
from core.logic.types import (
    GLOBAL,
    INT,
    PRE,
    REPLICA,
    TRUE,
    And,
    Cmp,
    Field,
    Formula,
    IntLit,
    Sort,
    Store,
    StoreSchema,
    Term,
    Var,
    conj,
)


def index_bound(name: str, bound: int) -> Formula:
    """0 <= p && p < N"""
    var = Var(name, INT)
    return conj(Cmp("<=", IntLit(0), var), Cmp("<", var, IntLit(bound)))


def _separator(stream: TokenStream) -> None:
    stream.accept(";") or stream.accept(",")


class CardParser:
    def __init__(self, text: str, source: Optional[str] = None):
        self.stream = TokenStream(text, source)
        self.source = source

    def parse(self) -> Card:
        stream = self.stream
        stream.expect("card")
        name = stream.ident("a card name")
        stream.expect("{")
        schema = self._store()
        init = self._init(schema) if stream.at("init") else None
        effects: List[EffectClass] = []
        guards: List[GuardDef] = []
        while not stream.accept("}"):
            if stream.at("effect"):
                effects.append(self._effect(schema, effects))
            elif stream.at("guard"):
                guards.append(self._guard(schema))
            else:
                raise stream.error(f"expected 'effect', 'guard' or '}}', found {stream.peek()}")
        if not stream.at_end():
            raise stream.error(f"unexpected {stream.peek()} after card")
        if init is None:
            raise stream.error(f"card {name} has no init block")
        try:
            return Card.build(name, schema, init, effects, guards)
        except (CardkitError, ValueError) as e:
            raise stream.error(str(e))

    def _store(self) -> StoreSchema:
        stream = self.stream
        stream.expect("store")
        stream.expect("{")
        fields: List[Tuple[str, Sort]] = []
        while not stream.accept("}"):
            field_name = stream.ident("a field name")
            stream.expect(":")
            fields.append((field_name, parse_sort(stream)))
            _separator(stream)
        try:
            return StoreSchema(tuple(fields))
        except ValueError as e:
            raise stream.error(str(e))

    def _init(self, schema: StoreSchema) -> Dict[str, object]:
        stream = self.stream
        stream.expect("init")
        stream.expect("{")
        values: Dict[str, object] = {}
        while not stream.accept("}"):
            field_name = stream.ident("a field name")
            stream.expect("=")
            values[field_name] = parse_value(stream)
            _separator(stream)
        return values

    def _params(self, schema: StoreSchema) -> Tuple[Param, ...]:
        stream = self.stream
        params: List[Param] = []
        if not stream.accept("("):
            return ()
        if stream.accept(")"):
            return ()
        while True:
            name = stream.ident("a parameter name")
            stream.expect(":")
            bound = None
            if stream.accept("index"):
                stream.expect("[")
                bound = stream.integer()
                stream.expect("]")
                sort = INT
            else:
                sort = parse_sort(stream)
            param_var = Var(name, sort, (0, bound - 1) if bound else None)
            variables = dict([(p.name, p.var) for p in params] + [(name, param_var)])
            scope = LogicScope(schema, (), variables, None, self.source)
            constraint = index_bound(name, bound) if bound else TRUE
            if stream.accept("where"):
                constraint = conj(constraint, scope.formula(parse_expr(stream)))
            params.append(Param(name, sort, constraint, bound))
            if stream.accept(")"):
                return tuple(params)
            stream.expect(",")

    def _effect(self, schema: StoreSchema, declared: List[EffectClass]) -> EffectClass:
        stream = self.stream
        stream.expect("effect")
        name = stream.ident("an effect name")
        if stream.accept("="):
            first = self._lookup(declared, stream.ident("an effect name"))
            stream.expect("then")
            second = self._lookup(declared, stream.ident("an effect name"))
            _separator(stream)
            return compose_effects(name, first, second)
        params = self._params(schema)
        scope = LogicScope(schema, (PRE,), {p.name: p.var for p in params}, PRE, self.source)
        stream.expect("{")
        updates: Dict[str, Term] = {}
        while not stream.accept("}"):
            token = stream.peek()
            field_name = stream.ident("a field name")
            if field_name not in schema:
                raise stream.error(f"unknown field '{field_name}'", token)
            index = None
            if stream.accept("["):
                index = scope.term(parse_expr(stream))
                stream.expect("]")
            stream.expect(":=")
            value = scope.term(parse_expr(stream))
            if index is not None:
                base = updates.get(field_name, Field(PRE, field_name, schema.sort_of(field_name)))
                value = Store(base, index, value)
            elif field_name in updates:
                raise stream.error(f"field '{field_name}' is assigned twice", token)
            updates[field_name] = value
            _separator(stream)
        return EffectClass(name, params, tuple(updates.items()))

    def _lookup(self, declared: List[EffectClass], name: str) -> EffectClass:
        for effect in declared:
            if effect.name == name:
                return effect
        if name == NOOP:
            return EffectClass(NOOP)
        raise self.stream.error(f"effect '{name}' must be declared before it is composed")

    def _guard(self, schema: StoreSchema) -> GuardDef:
        stream = self.stream
        stream.expect("guard")
        name = stream.ident("a guard name")
        stream.expect(":=")
        scope = LogicScope(schema, (GLOBAL, REPLICA), {}, None, self.source)
        body = scope.formula(parse_expr(stream))
        _separator(stream)
        return GuardDef(name, body)


def parse_card(text: str, source: Optional[str] = None) -> Card:
    """
    Parse a card file.

    Raises:
        ParseError: syntax error, unknown name or ill-sorted expression (with location)
    """
    return CardParser(text, source).parse()


# ---------------------------------------------------------------- serialization


def _constraint_text(param: Param) -> str:
    constraint = param.constraint
    if param.index_bound is not None:
        bound = index_bound(param.name, param.index_bound)
        parts = list(constraint.args) if isinstance(constraint, And) else [constraint]
        for piece in (bound.args if isinstance(bound, And) else (bound,)):
            if piece in parts:
                parts.remove(piece)
        constraint = conj(*parts)
    return "" if constraint == TRUE else f" where {constraint}"


def _param_text(param: Param) -> str:
    sort = f"index[{param.index_bound}]" if param.index_bound is not None else str(param.sort)
    return f"{param.name}: {sort}{_constraint_text(param)}"


def _implicit(card: Card) -> Tuple[bool, int]:
    """Whether effects[0] is the builtin NoOp, and how many leading guards are builtin"""
    noop = card.effects[0] == EffectClass(NOOP)
    skipped = 0
    if card.guards and card.guards[0] == GuardDef(TOP, TRUE):
        skipped = 1
        if len(card.guards) > 1 and card.guards[1] == identity_guard(card.schema):
            skipped = 2
    return noop, skipped


def serialize_card(card: Card) -> str:
    """Card file text; ``parse_card(serialize_card(c)) == c``"""
    lines = [f"card {card.name} {{", "  store {"]
    lines += [f"    {name}: {sort}" for name, sort in card.schema]
    lines += ["  }", "  init {"]
    lines += [f"    {name} = {render_value(value)}" for name, value in card.init.items]
    lines.append("  }")
    noop, skipped = _implicit(card)
    for effect in card.effects[1:] if noop else card.effects:
        params = f"({', '.join(_param_text(p) for p in effect.params)})" if effect.params else ""
        if not effect.updates:
            lines.append(f"  effect {effect.name}{params} {{ }}")
            continue
        lines.append(f"  effect {effect.name}{params} {{")
        lines += [f"    {name} := {term}" for name, term in effect.updates]
        lines.append("  }")
    for guard in card.guards[skipped:]:
        lines.append(f"  guard {guard.name} := {guard.body}")
    lines.append("}")
    return "\n".join(lines) + "\n"

