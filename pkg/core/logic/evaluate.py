"""
Concrete evaluation of terms and formulas

Values are Python ints, bools and tuples (arrays). Store states are passed as
a mapping from store tag to field values; parameters as a mapping from name to
value. Quantifiers are evaluated over a finite domain supplied by the caller.
"""

from typing import Any, Callable, Mapping, Optional, Sequence

from core.exceptions import EvaluationError
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
    Not,
    Or,
    Select,
    SortKind,
    Store,
    Term,
    Var,
)

Value = Any
Stores = Mapping[str, Mapping[str, Value]]
DomainFn = Callable[[Var], Sequence[Value]]


def _index(array: tuple, index: int) -> int:
    if not 0 <= index < len(array):
        raise EvaluationError(
            f"array index {index} out of bounds for length {len(array)}",
            details={"index": index, "length": len(array)},
        )
    return index


class Evaluator:
    """Evaluates nodes under fixed store and parameter valuations"""

    def __init__(
        self,
        stores: Stores,
        params: Optional[Mapping[str, Value]] = None,
        domain_for: Optional[DomainFn] = None,
    ):
        self.stores = stores
        self.params = dict(params or {})
        self.domain_for = domain_for

    def term(self, t: Term) -> Value:
        if isinstance(t, (IntLit, BoolLit)):
            return t.value
        if isinstance(t, ArrayLit):
            return t.values
        if isinstance(t, Field):
            try:
                return self.stores[t.store][t.name]
            except KeyError:
                raise EvaluationError(
                    f"no value for store field {t}", details={"store": t.store, "field": t.name}
                )
        if isinstance(t, Var):
            if t.name not in self.params:
                raise EvaluationError(f"unbound parameter '{t.name}'", details={"name": t.name})
            return self.params[t.name]
        if isinstance(t, Arith):
            lhs, rhs = self.term(t.lhs), self.term(t.rhs)
            if t.op == "+":
                return lhs + rhs
            if t.op == "-":
                return lhs - rhs
            return lhs * rhs
        if isinstance(t, Select):
            array = self.term(t.array)
            return array[_index(array, self.term(t.index))]
        if isinstance(t, Store):
            array = self.term(t.array)
            position = _index(array, self.term(t.index))
            return array[:position] + (self.term(t.value),) + array[position + 1:]
        if isinstance(t, Ite):
            return self.term(t.then) if self.formula(t.cond) else self.term(t.orelse)
        raise EvaluationError(f"cannot evaluate {t!r}")

    def formula(self, f: Formula) -> bool:
        if isinstance(f, Const):
            return f.value
        if isinstance(f, Cmp):
            lhs, rhs = self.term(f.lhs), self.term(f.rhs)
            if f.op == "=":
                return lhs == rhs
            if f.op == "!=":
                return lhs != rhs
            if f.op == "<=":
                return lhs <= rhs
            if f.op == ">=":
                return lhs >= rhs
            if f.op == "<":
                return lhs < rhs
            return lhs > rhs
        if isinstance(f, Atom):
            return bool(self.term(f.term))
        if isinstance(f, Not):
            return not self.formula(f.body)
        if isinstance(f, And):
            return all(self.formula(a) for a in f.args)
        if isinstance(f, Or):
            return any(self.formula(a) for a in f.args)
        if isinstance(f, Implies):
            return (not self.formula(f.lhs)) or self.formula(f.rhs)
        if isinstance(f, ForAll):
            return self._forall(f, 0)
        raise EvaluationError(f"cannot evaluate {f!r}")

    def _forall(self, f: ForAll, position: int) -> bool:
        if position == len(f.params):
            return self.formula(f.body)
        param = f.params[position]
        if param.sort.kind == SortKind.BOOL:
            domain: Sequence[Value] = (False, True)
        elif self.domain_for is not None:
            domain = self.domain_for(param)
        else:
            raise EvaluationError(f"no enumeration domain for quantified '{param.name}'")
        saved = self.params.get(param.name, _MISSING)
        try:
            for value in domain:
                self.params[param.name] = value
                if not self._forall(f, position + 1):
                    return False
            return True
        finally:
            if saved is _MISSING:
                self.params.pop(param.name, None)
            else:
                self.params[param.name] = saved


_MISSING = object()


def eval_term(t: Term, stores: Stores, params: Optional[Mapping[str, Value]] = None) -> Value:
    return Evaluator(stores, params).term(t)


def eval_formula(
    f: Formula,
    stores: Stores,
    params: Optional[Mapping[str, Value]] = None,
    domain_for: Optional[DomainFn] = None,
) -> bool:
    return Evaluator(stores, params, domain_for).formula(f)
