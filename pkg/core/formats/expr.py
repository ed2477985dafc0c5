"""
Expression grammar

One precedence-climbing parser serves guards, assignments, invariants, event
specifications and λ^Q bodies. It produces an untyped ``Expr`` tree;
``LogicScope`` turns it into sorted logic terms and formulas, while the
operations parser turns it into λ^Q terms.

Precedence, loosest first: ``<=>``, ``=>`` (right), ``||``, ``&&``, ``!``,
comparisons, ``+ -``, ``*``, unary ``-``, postfix ``.f`` ``[i]`` ``(args)``.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from core.exceptions import CardkitError, ParseError
from core.formats.lexer import IDENT, INT, Token, TokenStream
from core.logic.types import (
    BOOL,
    FALSE,
    INT as INT_SORT,
    TRUE,
    Arith,
    ArrayLit,
    Atom,
    BoolLit,
    Cmp,
    Field,
    ForAll,
    Formula,
    IntLit,
    Ite,
    Not,
    Select,
    Sort,
    SortKind,
    Store,
    StoreSchema,
    Term,
    Var,
    array_of,
    conj,
    disj,
    iff,
    implies,
)
from core.logic.transform import sort_of

CMP = ("==", "!=", "<=", ">=", "<", ">")
KEYWORDS = frozenset({"if", "then", "else", "forall", "fun", "query", "as", "in", "emit", "true", "false"})


@dataclass(frozen=True)
class Expr:
    kind: str
    value: Any = None
    args: Tuple["Expr", ...] = ()
    line: int = 0
    column: int = 0


def _node(token: Token, kind: str, value: Any = None, args: Tuple[Expr, ...] = ()) -> Expr:
    return Expr(kind, value, args, token.line, token.column)


# ---------------------------------------------------------------- sorts and types


def parse_sort(stream: TokenStream) -> Sort:
    """``int``, ``bool`` or ``array[<sort>;N]``"""
    name = stream.ident("a sort")
    if name == "int":
        return INT_SORT
    if name == "bool":
        return BOOL
    if name == "array":
        stream.expect("[")
        element = parse_sort(stream)
        stream.expect(";")
        length = stream.integer()
        stream.expect("]")
        if length <= 0:
            raise stream.error("array length must be positive")
        return array_of(element, length)
    raise stream.error(f"unknown sort '{name}'")


# ---------------------------------------------------------------- expressions


class ExprParser:
    def __init__(self, stream: TokenStream):
        self.stream = stream

    def parse(self) -> Expr:
        return self._iff()

    def _binary(self, token: Token, op: str, lhs: Expr, rhs: Expr) -> Expr:
        return _node(token, "binop", op, (lhs, rhs))

    def _iff(self) -> Expr:
        lhs = self._implies()
        while self.stream.at("<=>"):
            token = self.stream.next()
            lhs = self._binary(token, "<=>", lhs, self._implies())
        return lhs

    def _implies(self) -> Expr:
        lhs = self._or()
        if self.stream.at("=>"):
            token = self.stream.next()
            return self._binary(token, "=>", lhs, self._implies())
        return lhs

    def _or(self) -> Expr:
        lhs = self._and()
        while self.stream.at("||"):
            token = self.stream.next()
            lhs = self._binary(token, "||", lhs, self._and())
        return lhs

    def _and(self) -> Expr:
        lhs = self._not()
        while self.stream.at("&&"):
            token = self.stream.next()
            lhs = self._binary(token, "&&", lhs, self._not())
        return lhs

    def _not(self) -> Expr:
        if self.stream.at("!"):
            token = self.stream.next()
            return _node(token, "not", None, (self._not(),))
        return self._cmp()

    def _cmp(self) -> Expr:
        lhs = self._add()
        token = self.stream.peek()
        if token.text in CMP and token.kind != IDENT:
            self.stream.next()
            return self._binary(token, token.text, lhs, self._add())
        return lhs

    def _add(self) -> Expr:
        lhs = self._mul()
        while self.stream.at("+") or self.stream.at("-"):
            token = self.stream.next()
            lhs = self._binary(token, token.text, lhs, self._mul())
        return lhs

    def _mul(self) -> Expr:
        lhs = self._unary()
        while self.stream.at("*"):
            token = self.stream.next()
            lhs = self._binary(token, "*", lhs, self._unary())
        return lhs

    def _unary(self) -> Expr:
        if self.stream.at("-"):
            token = self.stream.next()
            if self.stream.peek().kind == INT:
                return _node(token, "int", -int(self.stream.next().text))
            return _node(token, "neg", None, (self._unary(),))
        return self._postfix()

    def _postfix(self) -> Expr:
        expr = self._primary()
        while True:
            token = self.stream.peek()
            if self.stream.accept("."):
                expr = _node(token, "field", self.stream.ident("a field name"), (expr,))
            elif self.stream.accept("["):
                index = self.parse()
                self.stream.expect("]")
                expr = _node(token, "index", None, (expr, index))
            elif self.stream.at("(") and expr.kind in ("name", "paren"):
                self.stream.next()
                args = self._arguments(")")
                expr = _node(token, "call", None, (expr,) + args)
            else:
                return expr

    def _arguments(self, closing: str) -> Tuple[Expr, ...]:
        args = []
        if not self.stream.accept(closing):
            args.append(self.parse())
            while self.stream.accept(","):
                args.append(self.parse())
            self.stream.expect(closing)
        return tuple(args)

    def _primary(self) -> Expr:
        stream = self.stream
        token = stream.peek()
        if token.kind == INT:
            stream.next()
            return _node(token, "int", int(token.text))
        if stream.accept("true"):
            return _node(token, "bool", True)
        if stream.accept("false"):
            return _node(token, "bool", False)
        if stream.accept("("):
            inner = self.parse()
            stream.expect(")")
            return Expr("paren", None, (inner,), token.line, token.column)
        if stream.accept("["):
            return _node(token, "array", None, self._arguments("]"))
        if stream.accept("if"):
            cond = self.parse()
            stream.expect("then")
            then = self.parse()
            stream.expect("else")
            return _node(token, "if", None, (cond, then, self.parse()))
        if stream.accept("forall"):
            binders = [self._binder()]
            while stream.accept(","):
                binders.append(self._binder())
            stream.expect(".")
            return _node(token, "forall", tuple(binders), (self.parse(),))
        if stream.accept("fun"):
            stream.expect("(")
            params = [self._typed_param()]
            while stream.accept(","):
                params.append(self._typed_param())
            stream.expect(")")
            stream.expect("=>")
            return _node(token, "fun", tuple(params), (self.parse(),))
        if stream.accept("query"):
            guards = [stream.ident("a guard name")]
            while stream.accept("&&"):
                guards.append(stream.ident("a guard name"))
            stream.expect("as")
            binder = stream.ident("a binder")
            stream.expect("in")
            return _node(token, "query", (tuple(guards), binder), (self.parse(),))
        if stream.accept("emit"):
            stream.expect("(")
            effect = self.parse()
            stream.expect(",")
            ret = self.parse()
            stream.expect(")")
            return _node(token, "emit", None, (effect, ret))
        if token.kind == IDENT and token.text not in KEYWORDS:
            stream.next()
            return _node(token, "name", token.text)
        raise stream.error(f"unexpected {token}")

    def _binder(self) -> Tuple[str, Sort]:
        name = self.stream.ident("a bound variable")
        self.stream.expect(":")
        return name, parse_sort(self.stream)

    def _typed_param(self) -> Tuple[str, Any]:
        from core.formats.ops_parser import parse_type_syntax

        name = self.stream.ident("a parameter")
        self.stream.expect(":")
        return name, parse_type_syntax(self.stream)


def parse_expr(stream: TokenStream) -> Expr:
    return ExprParser(stream).parse()


def strip_parens(expr: Expr) -> Expr:
    while expr.kind == "paren":
        expr = expr.args[0]
    return expr


# ---------------------------------------------------------------- logic conversion


class LogicScope:
    """
    Resolves names while converting expressions to logic.

    Args:
        schema: the card's store schema
        stores: store tags that may be accessed (``g``/``r``, ``s``/``s'``, ...)
        variables: parameter names with their sorts (and optional domains)
        bare_fields: store tag used for bare field names (effect assignments)
    """

    def __init__(
        self,
        schema: StoreSchema,
        stores: Iterable[str] = (),
        variables: Optional[Mapping[str, Var]] = None,
        bare_fields: Optional[str] = None,
        source: Optional[str] = None,
    ):
        self.schema = schema
        self.stores = tuple(stores)
        self.variables: Dict[str, Var] = dict(variables or {})
        self.bare_fields = bare_fields
        self.source = source

    def error(self, message: str, expr: Expr) -> ParseError:
        return ParseError(message, source=self.source, line=expr.line, column=expr.column)

    def with_vars(self, extra: Iterable[Var]) -> "LogicScope":
        variables = dict(self.variables)
        variables.update({v.name: v for v in extra})
        return LogicScope(self.schema, self.stores, variables, self.bare_fields, self.source)

    def _sort(self, term: Term, expr: Expr) -> Sort:
        try:
            return sort_of(term)
        except CardkitError as e:
            raise self.error(e.message, expr)

    def _field(self, store: str, name: str, expr: Expr) -> Field:
        if name not in self.schema:
            raise self.error(f"unknown field '{name}'", expr)
        return Field(store, name, self.schema.sort_of(name))

    def term(self, expr: Expr) -> Term:
        expr = strip_parens(expr)
        kind = expr.kind
        if kind == "int":
            return IntLit(expr.value)
        if kind == "bool":
            return BoolLit(expr.value)
        if kind == "name":
            name = expr.value
            if name in self.variables:
                return self.variables[name]
            if name in self.stores:
                if not self.schema.single:
                    raise self.error(f"store '{name}' has several fields; write {name}.<field>", expr)
                return self._field(name, self.schema.names[0], expr)
            if self.bare_fields is not None and name in self.schema:
                return self._field(self.bare_fields, name, expr)
            raise self.error(f"unknown name '{name}'", expr)
        if kind == "field":
            target = strip_parens(expr.args[0])
            if target.kind != "name" or target.value not in self.stores:
                raise self.error(f"fields can only be read from stores {list(self.stores)}", expr)
            return self._field(target.value, expr.value, expr)
        if kind == "index":
            array = self.term(expr.args[0])
            result = Select(array, self.term(expr.args[1]))
            self._sort(result, expr)
            return result
        if kind == "neg":
            result = Arith("-", IntLit(0), self.term(expr.args[0]))
            self._sort(result, expr)
            return result
        if kind == "binop" and expr.value in ("+", "-", "*"):
            result = Arith(expr.value, self.term(expr.args[0]), self.term(expr.args[1]))
            self._sort(result, expr)
            return result
        if kind == "if":
            cond, then, orelse = expr.args
            result = Ite(self.formula(cond), self.term(then), self.term(orelse))
            self._sort(result, expr)
            return result
        if kind == "array":
            values = []
            for item in expr.args:
                literal = self.term(item)
                if not isinstance(literal, (IntLit, BoolLit)):
                    raise self.error("array literals hold constants only", item)
                values.append(literal.value)
            element = BOOL if values and isinstance(values[0], bool) else INT_SORT
            return ArrayLit(tuple(values), array_of(element, len(values)))
        if kind == "call":
            return self._call(expr)
        if kind in ("binop", "not"):
            return Ite(self.formula(expr), BoolLit(True), BoolLit(False))
        raise self.error(f"not a term: {kind}", expr)

    def _call(self, expr: Expr) -> Term:
        callee = strip_parens(expr.args[0])
        args = expr.args[1:]
        name = callee.value if callee.kind == "name" else None
        if name == "sum" and len(args) == 1:
            array = self.term(args[0])
            sort = self._sort(array, expr)
            if sort.kind != SortKind.ARRAY or sort.element.kind != SortKind.INT or not sort.length:
                raise self.error("sum needs an integer array of known length", expr)
            total: Term = Select(array, IntLit(0))
            for index in range(1, sort.length):
                total = Arith("+", total, Select(array, IntLit(index)))
            return total
        if name == "store" and len(args) == 3:
            result = Store(self.term(args[0]), self.term(args[1]), self.term(args[2]))
            self._sort(result, expr)
            return result
        raise self.error(f"unknown function '{name}'", expr)

    def formula(self, expr: Expr) -> Formula:
        expr = strip_parens(expr)
        kind = expr.kind
        if kind == "bool":
            return TRUE if expr.value else FALSE
        if kind == "not":
            return Not(self.formula(expr.args[0]))
        if kind == "forall":
            params = tuple(Var(name, sort) for name, sort in expr.value)
            body = self.with_vars(params).formula(expr.args[0])
            return ForAll(params, body)
        if kind == "binop":
            op = expr.value
            lhs, rhs = expr.args
            if op == "&&":
                return conj(self.formula(lhs), self.formula(rhs))
            if op == "||":
                return disj(self.formula(lhs), self.formula(rhs))
            if op == "=>":
                return implies(self.formula(lhs), self.formula(rhs))
            if op == "<=>":
                return iff(self.formula(lhs), self.formula(rhs))
            if op in CMP:
                left, right = self.term(lhs), self.term(rhs)
                left_sort, right_sort = self._sort(left, lhs), self._sort(right, rhs)
                if left_sort != right_sort:
                    raise self.error(f"comparison of {left_sort} with {right_sort}", expr)
                if op not in ("==", "!=") and left_sort != INT_SORT:
                    raise self.error(f"'{op}' compares integers only", expr)
                return Cmp("=" if op == "==" else op, left, right)
        term = self.term(expr)
        if self._sort(term, expr) != BOOL:
            raise self.error("expected a boolean", expr)
        return Atom(term)


def parse_formula(text: str, scope: LogicScope) -> Formula:
    """Parse a standalone formula (e.g. a command-line invariant)"""
    stream = TokenStream(text, scope.source)
    formula = scope.formula(parse_expr(stream))
    if not stream.at_end():
        raise stream.error(f"unexpected {stream.peek()} after formula")
    return formula


def parse_value(stream: TokenStream) -> Any:
    """A concrete value: integer, boolean or array literal"""
    if stream.accept("true"):
        return True
    if stream.accept("false"):
        return False
    if stream.accept("["):
        items = []
        if not stream.accept("]"):
            items.append(parse_value(stream))
            while stream.accept(","):
                items.append(parse_value(stream))
            stream.expect("]")
        return tuple(items)
    if stream.accept("-"):
        return -stream.integer()
    return stream.integer()

