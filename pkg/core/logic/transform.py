"""
Formula transformations

Sorting judgment, capture-avoiding substitution of parameters and store
fields, effect application on chosen store sides, and a light simplifier.
"""

from enum import Enum
from typing import Dict, Iterable, Mapping, Optional, Set, Tuple, Union

from core.exceptions import SchemaError, SortError
from core.logic.types import (
    BOOL,
    FALSE,
    GLOBAL,
    INT,
    PRE,
    REPLICA,
    TRUE,
    And,
    ArrayLit,
    Arith,
    Atom,
    BoolLit,
    Cmp,
    Const,
    Field,
    ForAll,
    Formula,
    Implies,
    IntLit,
    Ite,
    Node,
    Not,
    Or,
    Select,
    Sort,
    SortKind,
    Store,
    Term,
    Var,
    conj,
    disj,
    forall,
    implies,
    literal,
)


class Side(Enum):
    """Which store arguments of a two-state formula an effect updates"""
    GLOBAL = "global"
    REPLICA = "replica"
    BOTH = "both"

    @property
    def stores(self) -> Tuple[str, ...]:
        if self is Side.GLOBAL:
            return (GLOBAL,)
        if self is Side.REPLICA:
            return (REPLICA,)
        return (GLOBAL, REPLICA)


FieldKey = Tuple[str, str]


# ---------------------------------------------------------------- sorting


def sort_of(term: Term) -> Sort:
    """Sort of a term; raises SortError when the term is ill-sorted"""
    if isinstance(term, IntLit):
        return INT
    if isinstance(term, BoolLit):
        return BOOL
    if isinstance(term, (Field, Var, ArrayLit)):
        return term.sort
    if isinstance(term, Arith):
        for side in (term.lhs, term.rhs):
            if sort_of(side) != INT:
                raise SortError(
                    f"operand of '{term.op}' is not an int: {side}", expected=INT, actual=sort_of(side)
                )
        if term.op == "*" and not (isinstance(term.lhs, IntLit) or isinstance(term.rhs, IntLit)):
            raise SortError(f"nonlinear multiplication: {term}")
        if term.op not in ("+", "-", "*"):
            raise SortError(f"unknown arithmetic operator {term.op}")
        return INT
    if isinstance(term, Select):
        array_sort = sort_of(term.array)
        if array_sort.kind != SortKind.ARRAY:
            raise SortError(f"select from non-array {term.array}", actual=array_sort)
        if sort_of(term.index) != INT:
            raise SortError(f"array index is not an int: {term.index}")
        return array_sort.element
    if isinstance(term, Store):
        array_sort = sort_of(term.array)
        if array_sort.kind != SortKind.ARRAY:
            raise SortError(f"store into non-array {term.array}", actual=array_sort)
        if sort_of(term.index) != INT:
            raise SortError(f"array index is not an int: {term.index}")
        value_sort = sort_of(term.value)
        if value_sort != array_sort.element:
            raise SortError(
                f"stored value has the wrong sort: {term.value}",
                expected=array_sort.element, actual=value_sort,
            )
        return array_sort
    if isinstance(term, Ite):
        check_sorts(term.cond)
        then_sort, else_sort = sort_of(term.then), sort_of(term.orelse)
        if then_sort != else_sort:
            raise SortError(f"branches of {term} disagree", expected=then_sort, actual=else_sort)
        return then_sort
    raise SortError(f"not a term: {term!r}")


def check_sorts(f: Formula) -> None:
    """Sorting judgment for formulas"""
    if isinstance(f, Const):
        return
    if isinstance(f, Cmp):
        lhs, rhs = sort_of(f.lhs), sort_of(f.rhs)
        if lhs != rhs:
            raise SortError(f"comparison of different sorts: {f}", expected=lhs, actual=rhs)
        if f.op not in ("=", "!=") and lhs != INT:
            raise SortError(f"ordering on non-int sort: {f}", actual=lhs)
        return
    if isinstance(f, Atom):
        if sort_of(f.term) != BOOL:
            raise SortError(f"atom is not boolean: {f.term}", expected=BOOL, actual=sort_of(f.term))
        return
    if isinstance(f, Not):
        check_sorts(f.body)
        return
    if isinstance(f, (And, Or)):
        for arg in f.args:
            check_sorts(arg)
        return
    if isinstance(f, Implies):
        check_sorts(f.lhs)
        check_sorts(f.rhs)
        return
    if isinstance(f, ForAll):
        for param in f.params:
            if param.sort.kind == SortKind.ARRAY:
                raise SortError(f"quantified variable {param.name} must be int or bool", name=param.name)
        check_sorts(f.body)
        return
    raise SortError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- traversal


def children(node: Node) -> Tuple[Node, ...]:
    if isinstance(node, Arith):
        return (node.lhs, node.rhs)
    if isinstance(node, Select):
        return (node.array, node.index)
    if isinstance(node, Store):
        return (node.array, node.index, node.value)
    if isinstance(node, Ite):
        return (node.cond, node.then, node.orelse)
    if isinstance(node, Cmp):
        return (node.lhs, node.rhs)
    if isinstance(node, Atom):
        return (node.term,)
    if isinstance(node, Not):
        return (node.body,)
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, Implies):
        return (node.lhs, node.rhs)
    if isinstance(node, ForAll):
        return (node.body,)
    return ()


def free_vars(node: Node) -> Set[Var]:
    """Parameter variables not bound by a quantifier"""
    if isinstance(node, Var):
        return {node}
    if isinstance(node, ForAll):
        bound = {p.name for p in node.params}
        return {v for v in free_vars(node.body) if v.name not in bound}
    result: Set[Var] = set()
    for child in children(node):
        result |= free_vars(child)
    return result


def store_fields(node: Node) -> Set[Field]:
    """All store-field accesses"""
    if isinstance(node, Field):
        return {node}
    result: Set[Field] = set()
    for child in children(node):
        result |= store_fields(child)
    return result


def stores_of(node: Node) -> Set[str]:
    return {f.store for f in store_fields(node)}


def _fresh(name: str, taken: Set[str]) -> str:
    k = 1
    while f"{name}_{k}" in taken:
        k += 1
    return f"{name}_{k}"


def _all_names(node: Node) -> Set[str]:
    if isinstance(node, Var):
        return {node.name}
    names: Set[str] = set()
    if isinstance(node, ForAll):
        names |= {p.name for p in node.params}
    for child in children(node):
        names |= _all_names(child)
    return names


def _rewrite(node: Node, fields: Mapping[FieldKey, Term], params: Mapping[str, Term]) -> Node:
    if isinstance(node, (IntLit, BoolLit, ArrayLit, Const)):
        return node
    if isinstance(node, Field):
        return fields.get((node.store, node.name), node)
    if isinstance(node, Var):
        if node.name not in params:
            return node
        replacement = params[node.name]
        actual = sort_of(replacement)
        if actual != node.sort:
            raise SortError(
                f"substitution for parameter '{node.name}' has the wrong sort",
                name=node.name, expected=node.sort, actual=actual,
            )
        return replacement
    if isinstance(node, Arith):
        return Arith(node.op, _rewrite(node.lhs, fields, params), _rewrite(node.rhs, fields, params))
    if isinstance(node, Select):
        return Select(_rewrite(node.array, fields, params), _rewrite(node.index, fields, params))
    if isinstance(node, Store):
        return Store(
            _rewrite(node.array, fields, params),
            _rewrite(node.index, fields, params),
            _rewrite(node.value, fields, params),
        )
    if isinstance(node, Ite):
        return Ite(
            _rewrite(node.cond, fields, params),
            _rewrite(node.then, fields, params),
            _rewrite(node.orelse, fields, params),
        )
    if isinstance(node, Cmp):
        return Cmp(node.op, _rewrite(node.lhs, fields, params), _rewrite(node.rhs, fields, params))
    if isinstance(node, Atom):
        return Atom(_rewrite(node.term, fields, params))
    if isinstance(node, Not):
        return Not(_rewrite(node.body, fields, params))
    if isinstance(node, And):
        return And(tuple(_rewrite(a, fields, params) for a in node.args))
    if isinstance(node, Or):
        return Or(tuple(_rewrite(a, fields, params) for a in node.args))
    if isinstance(node, Implies):
        return Implies(_rewrite(node.lhs, fields, params), _rewrite(node.rhs, fields, params))
    if isinstance(node, ForAll):
        bound = {p.name for p in node.params}
        inner = {k: v for k, v in params.items() if k not in bound}
        incoming: Set[str] = set()
        for term in list(inner.values()) + list(fields.values()):
            incoming |= {v.name for v in free_vars(term)}
        taken = incoming | _all_names(node.body) | set(inner)
        new_params = []
        for p in node.params:
            if p.name in incoming:
                renamed = Var(_fresh(p.name, taken), p.sort, p.domain)
                taken.add(renamed.name)
                inner[p.name] = renamed
                new_params.append(renamed)
            else:
                new_params.append(p)
        return ForAll(tuple(new_params), _rewrite(node.body, fields, inner))
    raise TypeError(f"cannot rewrite {node!r}")


def substitute(f: Node, bindings: Mapping[Union[str, Var], Term]) -> Node:
    """Capture-avoiding substitution of free parameter variables"""
    params = {(k.name if isinstance(k, Var) else k): v for k, v in bindings.items()}
    if not params:
        return f
    return _rewrite(f, {}, params)


def substitute_fields(f: Node, bindings: Mapping[FieldKey, Term]) -> Node:
    """Simultaneous replacement of store-field accesses keyed by (store, field)"""
    if not bindings:
        return f
    return _rewrite(f, bindings, {})


def rename_store(f: Node, old: str, new: str) -> Node:
    """Retag every access of store state ``old`` as ``new``"""
    mapping = {
        (fld.store, fld.name): Field(new, fld.name, fld.sort)
        for fld in store_fields(f)
        if fld.store == old
    }
    return substitute_fields(f, mapping)


def instantiate_store(f: Node, store: str, values: Mapping[str, Term]) -> Node:
    """Replace every field of ``store`` by the given terms (e.g. literals)"""
    mapping = {
        (fld.store, fld.name): values[fld.name]
        for fld in store_fields(f)
        if fld.store == store and fld.name in values
    }
    return substitute_fields(f, mapping)


def apply_assignments(
    f: Node,
    assignments: Mapping[str, Term],
    stores: Iterable[str],
    source: str = PRE,
) -> Node:
    """
    Replace field accesses on the given stores by their assignment terms.

    Assignment terms are written over the ``source`` store (old field values);
    fields without an assignment keep their value.
    """
    mapping: Dict[FieldKey, Term] = {}
    present = store_fields(f)
    for store in stores:
        for fld in present:
            if fld.store != store or fld.name not in assignments:
                continue
            term = assignments[fld.name]
            term_sort = sort_of(term)
            if term_sort != fld.sort:
                raise SchemaError(
                    f"assignment to '{fld.name}' has sort {term_sort}, field has {fld.sort}",
                    field=fld.name,
                )
            mapping[(store, fld.name)] = rename_store(term, source, store)
    return substitute_fields(f, mapping)


def apply_effect(f: Formula, effect, side: Side) -> Formula:
    """
    Apply an effect's denotation to the selected store sides of a two-state formula.

    Args:
        f: formula over g/r
        effect: any object exposing ``assignments`` (field → term over ``s`` and params)
        side: which stores the effect updates

    Returns:
        f with every access on the selected sides replaced simultaneously
    """
    return apply_assignments(f, effect.assignments, side.stores)


# ---------------------------------------------------------------- simplification


def _lit(t: Term) -> Optional[int]:
    return t.value if isinstance(t, IntLit) else None


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


def simplify(node: Node) -> Node:
    """Constant folding and neutral-element elimination"""
    if isinstance(node, Arith):
        lhs, rhs = simplify(node.lhs), simplify(node.rhs)
        a, b = _lit(lhs), _lit(rhs)
        if a is not None and b is not None:
            return IntLit({"+": a + b, "-": a - b, "*": a * b}[node.op])
        if node.op == "+":
            if a == 0:
                return rhs
            if b == 0:
                return lhs
        if node.op == "-" and b == 0:
            return lhs
        if node.op == "-" and lhs == rhs:
            return IntLit(0)
        if node.op == "*":
            if a == 0 or b == 0:
                return IntLit(0)
            if a == 1:
                return rhs
            if b == 1:
                return lhs
        return Arith(node.op, lhs, rhs)
    if isinstance(node, Select):
        array, index = simplify(node.array), simplify(node.index)
        if isinstance(array, ArrayLit) and _lit(index) is not None and 0 <= index.value < len(array.values):
            return literal(array.values[index.value], array.sort.element)
        if isinstance(array, Store):
            if array.index == index:
                return array.value
            if _lit(array.index) is not None and _lit(index) is not None:
                return simplify(Select(array.array, index))
        return Select(array, index)
    if isinstance(node, Store):
        return Store(simplify(node.array), simplify(node.index), simplify(node.value))
    if isinstance(node, Ite):
        cond = simplify(node.cond)
        if cond == TRUE:
            return simplify(node.then)
        if cond == FALSE:
            return simplify(node.orelse)
        then, orelse = simplify(node.then), simplify(node.orelse)
        return then if then == orelse else Ite(cond, then, orelse)
    if isinstance(node, Cmp):
        lhs, rhs = simplify(node.lhs), simplify(node.rhs)
        if isinstance(lhs, (IntLit, BoolLit)) and isinstance(rhs, (IntLit, BoolLit)):
            return TRUE if _CMP[node.op](lhs.value, rhs.value) else FALSE
        if lhs == rhs:
            return TRUE if node.op in ("=", "<=", ">=") else FALSE
        return Cmp(node.op, lhs, rhs)
    if isinstance(node, Atom):
        term = simplify(node.term)
        if isinstance(term, BoolLit):
            return TRUE if term.value else FALSE
        return Atom(term)
    if isinstance(node, Not):
        body = simplify(node.body)
        if isinstance(body, Const):
            return FALSE if body.value else TRUE
        if isinstance(body, Not):
            return body.body
        return Not(body)
    if isinstance(node, And):
        return conj(*(simplify(a) for a in node.args))
    if isinstance(node, Or):
        return disj(*(simplify(a) for a in node.args))
    if isinstance(node, Implies):
        lhs, rhs = simplify(node.lhs), simplify(node.rhs)
        if lhs == rhs:
            return TRUE
        return implies(lhs, rhs)
    if isinstance(node, ForAll):
        body = simplify(node.body)
        used = {v.name for v in free_vars(body)}
        return forall([p for p in node.params if p.name in used], body)
    return node


def strip_foralls(f: Formula) -> Tuple[Tuple[Var, ...], Formula]:
    """
    Hoist top-level universal quantifiers: ∀x.φ is valid iff φ is valid with x free.

    Returns the hoisted variables (renamed apart from free ones) and the body.
    """
    hoisted = []
    taken = {v.name for v in free_vars(f)}
    while isinstance(f, ForAll):
        renaming = {}
        for p in f.params:
            if p.name in taken:
                fresh = Var(_fresh(p.name, taken | _all_names(f)), p.sort, p.domain)
                renaming[p.name] = fresh
                hoisted.append(fresh)
                taken.add(fresh.name)
            else:
                hoisted.append(p)
                taken.add(p.name)
        f = substitute(f.body, renaming) if renaming else f.body
    return tuple(hoisted), f
