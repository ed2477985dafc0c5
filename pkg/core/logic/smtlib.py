"""
SMT-LIB2 rendering

Validity of f is asked as unsatisfiability of ``(not f)``. Store fields are
declared once per store state with the tag as suffix (``val_g``, ``val_r``,
``val_sp`` for s'), free parameters as constants. Output is deterministic.
"""

import re
from typing import List

from core.logic.transform import free_vars, store_fields
from core.logic.types import (
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
)

LOGIC = "AUFLIA"

_STORE_TAGS = {"s'": "sp"}
_UNSAFE = re.compile(r"[^A-Za-z0-9_]")


def _sanitize(name: str) -> str:
    return _UNSAFE.sub("_", name.replace("'", "p"))


def field_symbol(fld: Field) -> str:
    tag = _STORE_TAGS.get(fld.store, fld.store)
    return f"{_sanitize(fld.name)}_{_sanitize(tag)}"


def var_symbol(var: Var) -> str:
    return _sanitize(var.name)


def smt_sort(sort: Sort) -> str:
    if sort.kind == SortKind.INT:
        return "Int"
    if sort.kind == SortKind.BOOL:
        return "Bool"
    return f"(Array Int {smt_sort(sort.element)})"


def _int(value: int) -> str:
    return str(value) if value >= 0 else f"(- {-value})"


def _literal(value, sort: Sort) -> str:
    if sort.kind == SortKind.INT:
        return _int(value)
    if sort.kind == SortKind.BOOL:
        return "true" if value else "false"
    kind = sort.element.kind
    default = 0 if kind == SortKind.INT else (False if kind == SortKind.BOOL else None)
    if default is None:
        default_text = _literal(value[0], sort.element)
    else:
        default_text = _literal(default, sort.element)
    text = f"((as const {smt_sort(sort)}) {default_text})"
    for position, item in enumerate(value):
        text = f"(store {text} {position} {_literal(item, sort.element)})"
    return text


def term_to_smt(t: Term) -> str:
    if isinstance(t, IntLit):
        return _int(t.value)
    if isinstance(t, BoolLit):
        return "true" if t.value else "false"
    if isinstance(t, ArrayLit):
        return _literal(t.values, t.sort)
    if isinstance(t, Field):
        return field_symbol(t)
    if isinstance(t, Var):
        return var_symbol(t)
    if isinstance(t, Arith):
        return f"({t.op} {term_to_smt(t.lhs)} {term_to_smt(t.rhs)})"
    if isinstance(t, Select):
        return f"(select {term_to_smt(t.array)} {term_to_smt(t.index)})"
    if isinstance(t, Store):
        return f"(store {term_to_smt(t.array)} {term_to_smt(t.index)} {term_to_smt(t.value)})"
    if isinstance(t, Ite):
        return f"(ite {formula_to_smt(t.cond)} {term_to_smt(t.then)} {term_to_smt(t.orelse)})"
    raise TypeError(f"not a term: {t!r}")


def formula_to_smt(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        lhs, rhs = term_to_smt(f.lhs), term_to_smt(f.rhs)
        if f.op == "!=":
            return f"(distinct {lhs} {rhs})"
        return f"({f.op} {lhs} {rhs})"
    if isinstance(f, Atom):
        return term_to_smt(f.term)
    if isinstance(f, Not):
        return f"(not {formula_to_smt(f.body)})"
    if isinstance(f, And):
        return "(and " + " ".join(formula_to_smt(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(formula_to_smt(a) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"(=> {formula_to_smt(f.lhs)} {formula_to_smt(f.rhs)})"
    if isinstance(f, ForAll):
        binders = " ".join(f"({var_symbol(p)} {smt_sort(p.sort)})" for p in f.params)
        return f"(forall ({binders}) {formula_to_smt(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def declarations(node: Node) -> List[str]:
    """Sorted declare-fun lines for every store field and free parameter"""
    symbols = {}
    for fld in store_fields(node):
        symbols[field_symbol(fld)] = fld.sort
    for var in free_vars(node):
        symbols[var_symbol(var)] = var.sort
    return [f"(declare-fun {name} () {smt_sort(symbols[name])})" for name in sorted(symbols)]


def smtlib_body(f: Formula) -> str:
    """Declarations and the negated assertion, without header or commands"""
    lines = declarations(f)
    lines.append(f"(assert (not {formula_to_smt(f)}))")
    return "\n".join(lines) + "\n"


def to_smtlib(f: Formula) -> str:
    """Deterministic SMT-LIB2 script whose unsatisfiability means f is valid"""
    return (
        "(set-option :produce-models true)\n"
        f"(set-logic {LOGIC})\n"
        + smtlib_body(f)
        + "(check-sat)\n"
    )
