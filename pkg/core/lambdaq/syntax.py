"""
λ^Q abstract syntax and refinement types

Operations are call-by-value λ-terms whose bodies end in ``query`` (guarded
read of the global store) and ``emit`` (effect plus return value) terms.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

from core.logic.types import BOOL, INT, TRUE, Formula, Sort, Var, conj
from core.logic.transform import substitute

NU = "v"
RESULT = "a"
RESERVED = frozenset({"a", "s", "s'", "g", "r"})

ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")
BOOL_OPS = ("&&", "||", "!", "=>")


class LqTerm:
    """Base class of λ^Q terms"""

    def __str__(self) -> str:
        from core.formats.ops_parser import render_term

        return render_term(self)


@dataclass(frozen=True)
class LVar(LqTerm):
    name: str


@dataclass(frozen=True)
class LConst(LqTerm):
    value: Union[int, bool]


@dataclass(frozen=True)
class Lambda(LqTerm):
    param: str
    annotation: "RefType"
    body: LqTerm


@dataclass(frozen=True)
class App(LqTerm):
    fn: LqTerm
    args: Tuple[LqTerm, ...]


@dataclass(frozen=True)
class LIte(LqTerm):
    cond: LqTerm
    then: LqTerm
    orelse: LqTerm


@dataclass(frozen=True)
class PrimOp(LqTerm):
    """Arithmetic, comparison or boolean operator; unary only for ``!``"""
    op: str
    args: Tuple[LqTerm, ...]


@dataclass(frozen=True)
class FieldAccess(LqTerm):
    """``x.f`` or ``x.f[i]`` on a query binder"""
    target: LqTerm
    name: str
    index: Optional[LqTerm] = None


@dataclass(frozen=True)
class EffectCtor(LqTerm):
    name: str
    args: Tuple[LqTerm, ...] = ()


@dataclass(frozen=True)
class Query(LqTerm):
    guards: Tuple[str, ...]
    binder: str
    body: LqTerm


@dataclass(frozen=True)
class ReturnEmit(LqTerm):
    effect: LqTerm
    ret: LqTerm


# ---------------------------------------------------------------- types


class RefType:
    """Base class of refinement types"""


@dataclass(frozen=True)
class BaseRef(RefType):
    """{ν: sort | refinement}; the refinement mentions ν as ``Var(NU)``"""
    sort: Sort
    refinement: Formula = TRUE

    @property
    def nu(self) -> Var:
        return Var(NU, self.sort)

    def at(self, term) -> Formula:
        """The refinement instantiated at a logic term"""
        return substitute(self.refinement, {NU: term})

    def __str__(self) -> str:
        if self.refinement == TRUE:
            return str(self.sort)
        return f"{{{NU}: {self.sort} | {self.refinement}}}"


@dataclass(frozen=True)
class FunType(RefType):
    param: str
    domain: RefType
    codomain: RefType

    def __str__(self) -> str:
        return f"({self.param}: {self.domain}) -> {self.codomain}"


@dataclass(frozen=True)
class OpType(RefType):
    """Op(card, return type, φ(s, s', a))"""
    card: str
    ret: BaseRef
    spec: Formula

    def __str__(self) -> str:
        return f"Op({self.card}, {self.ret}, {self.spec})"


INT_TYPE = BaseRef(INT)
BOOL_TYPE = BaseRef(BOOL)


@dataclass(frozen=True)
class TypingContext:
    """Ordered bindings, query binders (store-valued names) and path conditions"""
    bindings: Tuple[Tuple[str, RefType], ...] = ()
    stores: Tuple[str, ...] = ()
    conditions: Tuple[Formula, ...] = ()

    def names(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.bindings) + self.stores

    def lookup(self, name: str) -> Optional[RefType]:
        for bound, ty in reversed(self.bindings):
            if bound == name:
                return ty
        return None

    def bind(self, name: str, ty: RefType) -> "TypingContext":
        return TypingContext(self.bindings + ((name, ty),), self.stores, self.conditions)

    def bind_store(self, name: str) -> "TypingContext":
        return TypingContext(self.bindings, self.stores + (name,), self.conditions)

    def assume(self, condition: Formula) -> "TypingContext":
        return TypingContext(self.bindings, self.stores, self.conditions + (condition,))

    def formula(self) -> Formula:
        """⟦Γ⟧: refinements of base bindings at their names, then path conditions"""
        parts = [
            ty.at(Var(name, ty.sort))
            for name, ty in self.bindings
            if isinstance(ty, BaseRef)
        ]
        return conj(*parts, *self.conditions)


# ---------------------------------------------------------------- operations


@dataclass(frozen=True)
class OpDef:
    """A named operation: ``op name(params) : Op(...) = body``"""
    name: str
    params: Tuple[Tuple[str, BaseRef], ...]
    op_type: OpType
    body: LqTerm

    @property
    def term(self) -> LqTerm:
        term = self.body
        for name, ty in reversed(self.params):
            term = Lambda(name, ty, term)
        return term

    @property
    def type(self) -> RefType:
        ty: RefType = self.op_type
        for name, param_ty in reversed(self.params):
            ty = FunType(name, param_ty, ty)
        return ty

    def apply(self, *args: Any) -> LqTerm:
        if len(args) != len(self.params):
            raise ValueError(f"{self.name} expects {len(self.params)} arguments, got {len(args)}")
        if not args:
            return self.term
        return App(self.term, tuple(LConst(a) for a in args))


# ---------------------------------------------------------------- values


@dataclass(frozen=True)
class Closure:
    param: str
    body: LqTerm
    env: Tuple[Tuple[str, Any], ...] = ()

    def environment(self) -> Dict[str, Any]:
        return dict(self.env)


@dataclass(frozen=True)
class EffectValue:
    """An effect constructor applied to values, before instance validation"""
    name: str
    args: Tuple[Any, ...] = ()

    def __str__(self) -> str:
        from core.card.types import render_value

        if not self.args:
            return self.name
        return f"{self.name}({', '.join(render_value(a) for a in self.args)})"


@dataclass(frozen=True)
class OpExecState:
    """
    (s, ψ, t) of the operation execution rules.

    ``clauses`` keeps, per query step, the guard names and the store value bound
    to the binder, in source order. ``effect`` and ``rval`` are set once the
    term is a returned emit.
    """
    s: Any
    psi: Formula
    term: LqTerm
    env: Tuple[Tuple[str, Any], ...] = ()
    clauses: Tuple[Tuple[Tuple[str, ...], Any], ...] = ()
    drifts: Tuple[Any, ...] = field(default=())
    effect: Any = None
    rval: Any = None

    @property
    def done(self) -> bool:
        return self.effect is not None
