"""
Operation files

    op withdraw(n: {v: int | v >= 0}) : Op(Counter, int, (s >= 0 => s' >= 0) && a == s - s') =
      query LE as x in
        if x >= n then emit (Sub(n), n) else emit (NoOp, 0)

Terms: ``fun (x: T) => t``, application ``t(u, ...)``, ``if c then t else u``,
``query G1 && G2 as x in t``, ``emit (E(args), t)``, ``x.f`` and ``x.f[i]`` on
query binders (bare ``x`` for single-field stores), literals and the usual
operators. Event specifications range over ``s``, ``s'`` and ``a``.
"""

from typing import Callable, List, Optional, Tuple

from core.card.types import Card
from core.exceptions import ParseError
from core.formats.expr import Expr, LogicScope, parse_expr, parse_sort, strip_parens
from core.formats.lexer import TokenStream
from core.lambdaq.syntax import (
    NU,
    RESULT,
    App,
    BaseRef,
    EffectCtor,
    FieldAccess,
    FunType,
    Lambda,
    LConst,
    LIte,
    LqTerm,
    LVar,
    OpDef,
    OpType,
    PrimOp,
    Query,
    RefType,
    ReturnEmit,
)
from core.logic.transform import substitute
from core.logic.types import POST, PRE, TRUE, Sort, Var

CardResolver = Callable[[str], Card]


# ---------------------------------------------------------------- types


def parse_type_syntax(stream: TokenStream):
    """
    Type syntax before name resolution: a sort, ``{v: sort | <expr>}`` or
    ``(x: T) -> T``. Returned as nested tuples resolved by ``resolve_type``.
    """
    if stream.accept("{"):
        binder = stream.ident("a refinement binder")
        stream.expect(":")
        sort = parse_sort(stream)
        stream.expect("|")
        refinement = parse_expr(stream)
        stream.expect("}")
        return ("ref", sort, binder, refinement)
    if stream.at("("):
        stream.next()
        name = stream.ident("a parameter")
        stream.expect(":")
        domain = parse_type_syntax(stream)
        stream.expect(")")
        stream.expect("->")
        return ("fun", name, domain, parse_type_syntax(stream))
    return ("ref", parse_sort(stream), None, None)


def resolve_type(syntax, card: Card, variables: dict, source: Optional[str] = None) -> RefType:
    if syntax[0] == "fun":
        _, name, domain_syntax, codomain_syntax = syntax
        domain = resolve_type(domain_syntax, card, variables, source)
        inner = dict(variables)
        if isinstance(domain, BaseRef):
            inner[name] = Var(name, domain.sort)
        return FunType(name, domain, resolve_type(codomain_syntax, card, inner, source))
    _, sort, binder, refinement = syntax
    if refinement is None:
        return BaseRef(sort)
    scope_vars = dict(variables)
    scope_vars[binder] = Var(binder, sort)
    scope = LogicScope(card.schema, (), scope_vars, None, source)
    formula = scope.formula(refinement)
    if binder != NU:
        formula = substitute(formula, {binder: Var(NU, sort)})
    return BaseRef(sort, formula)


# ---------------------------------------------------------------- terms


def to_term(expr: Expr, card: Card, variables: dict, source: Optional[str] = None) -> LqTerm:
    """Convert a parsed expression to a λ^Q term; ``variables`` maps names to sorts for annotations"""
    kind = expr.kind
    if kind == "paren":
        return to_term(expr.args[0], card, variables, source)
    if kind in ("int", "bool"):
        return LConst(expr.value)
    if kind == "name":
        return LVar(expr.value)
    if kind == "field":
        return FieldAccess(to_term(expr.args[0], card, variables, source), expr.value)
    if kind == "index":
        target = strip_parens(expr.args[0])
        if target.kind != "field":
            raise ParseError(
                "only store fields can be indexed", source=source, line=expr.line, column=expr.column
            )
        base = to_term(target, card, variables, source)
        return FieldAccess(base.target, base.name, to_term(expr.args[1], card, variables, source))
    if kind == "binop":
        op = "==" if expr.value == "<=>" else expr.value
        return PrimOp(op, tuple(to_term(a, card, variables, source) for a in expr.args))
    if kind == "not":
        return PrimOp("!", (to_term(expr.args[0], card, variables, source),))
    if kind == "neg":
        return PrimOp("-", (LConst(0), to_term(expr.args[0], card, variables, source)))
    if kind == "if":
        cond, then, orelse = (to_term(a, card, variables, source) for a in expr.args)
        return LIte(cond, then, orelse)
    if kind == "call":
        fn = to_term(expr.args[0], card, variables, source)
        return App(fn, tuple(to_term(a, card, variables, source) for a in expr.args[1:]))
    if kind == "fun":
        params = expr.value
        inner = dict(variables)
        resolved = []
        for name, type_syntax in params:
            ty = resolve_type(type_syntax, card, inner, source)
            resolved.append((name, ty))
            if isinstance(ty, BaseRef):
                inner[name] = Var(name, ty.sort)
        body = to_term(expr.args[0], card, inner, source)
        for name, ty in reversed(resolved):
            body = Lambda(name, ty, body)
        return body
    if kind == "query":
        guards, binder = expr.value
        for guard in guards:
            if guard not in card.guard_names:
                raise ParseError(
                    f"card {card.name} has no guard '{guard}'",
                    source=source, line=expr.line, column=expr.column,
                )
        return Query(tuple(guards), binder, to_term(expr.args[0], card, variables, source))
    if kind == "emit":
        effect_expr, ret = expr.args
        effect = _effect_ctor(effect_expr, card, variables, source)
        return ReturnEmit(effect, to_term(ret, card, variables, source))
    raise ParseError(
        f"unsupported expression in an operation: {kind}", source=source, line=expr.line, column=expr.column
    )


def _effect_ctor(expr: Expr, card: Card, variables: dict, source: Optional[str]) -> EffectCtor:
    expr = strip_parens(expr)
    if expr.kind == "name":
        name, args = expr.value, ()
    elif expr.kind == "call" and strip_parens(expr.args[0]).kind == "name":
        name = strip_parens(expr.args[0]).value
        args = tuple(to_term(a, card, variables, source) for a in expr.args[1:])
    else:
        raise ParseError(
            "emit needs an effect constructor", source=source, line=expr.line, column=expr.column
        )
    if name not in card.effect_names:
        raise ParseError(
            f"card {card.name} has no effect '{name}'", source=source, line=expr.line, column=expr.column
        )
    return EffectCtor(name, args)


# ---------------------------------------------------------------- operation files


class OpsParser:
    def __init__(self, text: str, resolve_card: CardResolver, source: Optional[str] = None):
        self.stream = TokenStream(text, source)
        self.resolve_card = resolve_card
        self.source = source

    def parse(self) -> List[OpDef]:
        ops = []
        while not self.stream.at_end():
            ops.append(self._op())
        names = [op.name for op in ops]
        for name in names:
            if names.count(name) > 1:
                raise ParseError(f"operation '{name}' is defined twice", source=self.source)
        return ops

    def _op(self) -> OpDef:
        stream = self.stream
        stream.expect("op")
        name = stream.ident("an operation name")
        stream.expect("(")
        raw_params: List[Tuple[str, tuple]] = []
        if not stream.accept(")"):
            while True:
                param = stream.ident("a parameter")
                stream.expect(":")
                raw_params.append((param, parse_type_syntax(stream)))
                if stream.accept(")"):
                    break
                stream.expect(",")
        stream.expect(":")
        stream.expect("Op")
        stream.expect("(")
        card_token = stream.peek()
        card_name = stream.ident("a card name")
        try:
            card = self.resolve_card(card_name)
        except (KeyError, FileNotFoundError):
            raise stream.error(f"unknown card '{card_name}'", card_token)
        stream.expect(",")
        ret_syntax = parse_type_syntax(stream)
        stream.expect(",")
        spec_expr = parse_expr(stream)
        stream.expect(")")
        stream.expect("=")
        body_expr = parse_expr(stream)
        stream.accept(";")

        variables = {}
        params: List[Tuple[str, BaseRef]] = []
        for param, syntax in raw_params:
            ty = resolve_type(syntax, card, variables, self.source)
            if not isinstance(ty, BaseRef):
                raise stream.error(f"parameter '{param}' of {name} must have a base type")
            params.append((param, ty))
            variables[param] = Var(param, ty.sort)
        ret = resolve_type(ret_syntax, card, variables, self.source)
        if not isinstance(ret, BaseRef):
            raise stream.error(f"operation {name} must return a base type")
        spec_vars = dict(variables)
        spec_vars[RESULT] = Var(RESULT, ret.sort)
        spec = LogicScope(card.schema, (PRE, POST), spec_vars, None, self.source).formula(spec_expr)
        body = to_term(body_expr, card, variables, self.source)
        return OpDef(name, tuple(params), OpType(card.name, ret, spec), body)


def parse_ops(text: str, resolve_card: CardResolver, source: Optional[str] = None) -> List[OpDef]:
    """
    Parse an operations file; ``resolve_card`` maps the card named in each
    ``Op(...)`` type to its definition.
    """
    return OpsParser(text, resolve_card, source).parse()


def parse_term(text: str, card: Card, source: Optional[str] = None) -> LqTerm:
    """Parse a standalone λ^Q term over ``card``"""
    stream = TokenStream(text, source)
    term = to_term(parse_expr(stream), card, {}, source)
    if not stream.at_end():
        raise stream.error(f"unexpected {stream.peek()} after term")
    return term


# ---------------------------------------------------------------- rendering


def _type_text(ty: RefType) -> str:
    if isinstance(ty, BaseRef):
        return str(ty.sort) if ty.refinement == TRUE else f"{{{NU}: {ty.sort} | {ty.refinement}}}"
    if isinstance(ty, FunType):
        return f"({ty.param}: {_type_text(ty.domain)}) -> {_type_text(ty.codomain)}"
    return str(ty)


_ATOMIC = (LConst, LVar, FieldAccess, App, EffectCtor)


def render_term(t: LqTerm, nested: bool = False) -> str:
    """Concrete syntax of a λ^Q term; compound operands are parenthesized"""
    if nested and not isinstance(t, _ATOMIC):
        return f"({render_term(t)})"
    if isinstance(t, LConst):
        if isinstance(t.value, bool):
            return "true" if t.value else "false"
        return str(t.value)
    if isinstance(t, LVar):
        return t.name
    if isinstance(t, FieldAccess):
        text = f"{render_term(t.target, True)}.{t.name}"
        return text if t.index is None else f"{text}[{render_term(t.index)}]"
    if isinstance(t, PrimOp):
        if t.op == "!":
            return f"!{render_term(t.args[0], True)}"
        return f"{render_term(t.args[0], True)} {t.op} {render_term(t.args[1], True)}"
    if isinstance(t, LIte):
        return f"if {render_term(t.cond)} then {render_term(t.then)} else {render_term(t.orelse)}"
    if isinstance(t, Lambda):
        return f"fun ({t.param}: {_type_text(t.annotation)}) => {render_term(t.body)}"
    if isinstance(t, App):
        fn = render_term(t.fn, True)
        return f"{fn}({', '.join(render_term(a) for a in t.args)})"
    if isinstance(t, EffectCtor):
        if not t.args:
            return t.name
        return f"{t.name}({', '.join(render_term(a) for a in t.args)})"
    if isinstance(t, Query):
        return f"query {' && '.join(t.guards)} as {t.binder} in {render_term(t.body)}"
    if isinstance(t, ReturnEmit):
        return f"emit ({render_term(t.effect)}, {render_term(t.ret)})"
    raise TypeError(f"not a λ^Q term: {t!r}")


def serialize_op(op: OpDef) -> str:
    params = ", ".join(f"{name}: {_type_text(ty)}" for name, ty in op.params)
    op_type = op.op_type
    return (
        f"op {op.name}({params}) : Op({op_type.card}, {_type_text(op_type.ret)}, {op_type.spec}) =\n"
        f"  {render_term(op.body)}\n"
    )


def serialize_ops(ops: List[OpDef]) -> str:
    """Operations file text; parsing it back yields the same definitions"""
    return "\n".join(serialize_op(op) for op in ops)


def sort_of_param(op: OpDef, name: str) -> Sort:
    for param, ty in op.params:
        if param == name:
            return ty.sort
    raise KeyError(name)
