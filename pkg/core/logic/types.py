"""
Formula language types

Typed first-order terms and formulas over named store states. A store state is
identified by a tag: ``g``/``r`` for the global and replica arguments of a
guard, ``s``/``s'`` for the pre and post store of an event specification, and
any binder name (``x``) during λ^Q type checking.

All nodes are frozen dataclasses, hashable and safe to share between threads.
``str(node)`` renders the concrete syntax accepted by ``core.formats``.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional, Tuple, Union


GLOBAL = "g"
REPLICA = "r"
PRE = "s"
POST = "s'"


class SortKind(Enum):
    """Value universes of store fields and parameters"""
    INT = "int"
    BOOL = "bool"
    ARRAY = "array"


@dataclass(frozen=True)
class Sort:
    """A sort; arrays are Int-indexed with a fixed length carried from the schema"""
    kind: SortKind
    element: Optional["Sort"] = None
    length: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == SortKind.ARRAY:
            if self.element is None:
                raise ValueError("array sort requires an element sort")
            if self.depth > 2:
                raise ValueError("array nesting deeper than 2 is not supported")

    @property
    def depth(self) -> int:
        if self.kind != SortKind.ARRAY:
            return 0
        return 1 + self.element.depth

    @property
    def is_array(self) -> bool:
        return self.kind == SortKind.ARRAY

    def __str__(self) -> str:
        if self.kind == SortKind.ARRAY:
            return f"array[{self.element};{self.length}]"
        return self.kind.value


INT = Sort(SortKind.INT)
BOOL = Sort(SortKind.BOOL)


def array_of(element: Sort, length: int) -> Sort:
    return Sort(SortKind.ARRAY, element, length)


@dataclass(frozen=True)
class StoreSchema:
    """Ordered store fields; names unique, at least one field"""
    fields: Tuple[Tuple[str, Sort], ...]

    def __post_init__(self):
        names = [name for name, _ in self.fields]
        if not names:
            raise ValueError("a store schema needs at least one field")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate store fields in {names}")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.fields)

    @property
    def single(self) -> bool:
        return len(self.fields) == 1

    def sort_of(self, name: str) -> Sort:
        for field_name, sort in self.fields:
            if field_name == name:
                return sort
        raise KeyError(name)

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def __iter__(self) -> Iterator[Tuple[str, Sort]]:
        return iter(self.fields)


# ---------------------------------------------------------------- terms


class Term:
    """Base class of terms"""

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True, eq=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True, eq=True)
class BoolLit(Term):
    value: bool


@dataclass(frozen=True, eq=True)
class ArrayLit(Term):
    """Concrete array value (used when instantiating a store with a value)"""
    values: Tuple
    sort: Sort


@dataclass(frozen=True, eq=True)
class Field(Term):
    """Access of field ``name`` of store state ``store``"""
    store: str
    name: str
    sort: Sort


@dataclass(frozen=True, eq=True)
class Var(Term):
    """Parameter or bound variable; ``domain`` is an enumeration hint only"""
    name: str
    sort: Sort
    domain: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True, eq=True)
class Arith(Term):
    """``+``, ``-`` or ``*``; multiplication needs a literal operand"""
    op: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True, eq=True)
class Select(Term):
    array: Term
    index: Term


@dataclass(frozen=True, eq=True)
class Store(Term):
    array: Term
    index: Term
    value: Term


@dataclass(frozen=True, eq=True)
class Ite(Term):
    cond: "Formula"
    then: Term
    orelse: Term


# ---------------------------------------------------------------- formulas


class Formula:
    """Base class of formulas"""

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True, eq=True)
class Const(Formula):
    """⊤ or ⊥"""
    value: bool


TRUE = Const(True)
FALSE = Const(False)


COMPARISONS = ("=", "!=", "<=", ">=", "<", ">")


@dataclass(frozen=True, eq=True)
class Cmp(Formula):
    op: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    """A Bool-sorted term used as a formula"""
    term: Term


@dataclass(frozen=True, eq=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True, eq=True)
class And(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True, eq=True)
class Or(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True, eq=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True, eq=True)
class ForAll(Formula):
    """Universal quantification over parameter variables"""
    params: Tuple[Var, ...]
    body: Formula


Node = Union[Term, Formula]


def conj(*parts: Formula) -> Formula:
    """Flattening conjunction; drops ⊤ and collapses on ⊥"""
    args = []
    for part in parts:
        if isinstance(part, And):
            items: Iterable[Formula] = part.args
        else:
            items = (part,)
        for item in items:
            if item == TRUE:
                continue
            if item == FALSE:
                return FALSE
            if item not in args:
                args.append(item)
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return And(tuple(args))


def disj(*parts: Formula) -> Formula:
    args = []
    for part in parts:
        items = part.args if isinstance(part, Or) else (part,)
        for item in items:
            if item == FALSE:
                continue
            if item == TRUE:
                return TRUE
            if item not in args:
                args.append(item)
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return Or(tuple(args))


def implies(lhs: Formula, rhs: Formula) -> Formula:
    if lhs == TRUE:
        return rhs
    if lhs == FALSE or rhs == TRUE:
        return TRUE
    return Implies(lhs, rhs)


def forall(params: Iterable[Var], body: Formula) -> Formula:
    params = tuple(params)
    if not params or body in (TRUE, FALSE):
        return body
    return ForAll(params, body)


def iff(lhs: Formula, rhs: Formula) -> Formula:
    return conj(implies(lhs, rhs), implies(rhs, lhs))


def eq(lhs: Term, rhs: Term) -> Formula:
    return Cmp("=", lhs, rhs)


# ---------------------------------------------------------------- rendering


_FORMULA_PREC = {Implies: 1, Or: 2, And: 3}


def _render_store(tag: str) -> str:
    return tag


def _term(t: Term, top: bool = False) -> str:
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, BoolLit):
        return "true" if t.value else "false"
    if isinstance(t, ArrayLit):
        return "[" + ", ".join(_term(v, True) for v in _literal_items(t)) + "]"
    if isinstance(t, Field):
        return f"{_render_store(t.store)}.{t.name}"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Arith):
        text = f"{_term(t.lhs)} {t.op} {_term(t.rhs)}"
        return text if top else f"({text})"
    if isinstance(t, Select):
        return f"{_term(t.array)}[{_term(t.index, top=True)}]"
    if isinstance(t, Store):
        return f"store({_term(t.array, True)}, {_term(t.index, True)}, {_term(t.value, True)})"
    if isinstance(t, Ite):
        return f"(if {_formula(t.cond, 0)} then {_term(t.then, True)} else {_term(t.orelse, True)})"
    raise TypeError(f"not a term: {t!r}")


def _formula(f: Formula, prec: int) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        return f"{_term(f.lhs, True)} {'==' if f.op == '=' else f.op} {_term(f.rhs, True)}"
    if isinstance(f, Atom):
        return _term(f.term)
    if isinstance(f, Not):
        return f"!{_formula(f.body, 4)}"
    if isinstance(f, ForAll):
        binders = ", ".join(f"{p.name}: {p.sort}" for p in f.params)
        return f"(forall {binders}. {_formula(f.body, 0)})"
    own = _FORMULA_PREC[type(f)]
    if isinstance(f, Implies):
        text = f"{_formula(f.lhs, own + 1)} => {_formula(f.rhs, own)}"
    else:
        sep = " && " if isinstance(f, And) else " || "
        text = sep.join(_formula(a, own + 1) for a in f.args)
    return f"({text})" if own < prec else text


def render(node: Node) -> str:
    """Concrete syntax of a term or formula"""
    if isinstance(node, Term):
        return _term(node, top=True)
    return _formula(node, 0)


def _literal_items(t: ArrayLit):
    element = t.sort.element
    for value in t.values:
        yield literal(value, element)


def literal(value, sort: Sort) -> Term:
    """Term denoting a concrete value of the given sort"""
    if sort.kind == SortKind.BOOL:
        return BoolLit(bool(value))
    if sort.kind == SortKind.INT:
        return IntLit(int(value))
    return ArrayLit(tuple(value), sort)
