"""
Refinement type checking of λ^Q operations

Checking is syntax directed and produces verification conditions (VCs) instead
of deciding them: a query adds its guard (global side read as the pre store
``s``, replica side as the binder) to the context, a conditional adds its
condition or the negation, and an emit produces
⟦Γ⟧ ∧ s' = ⟦e⟧(s) ∧ a = ret ⇒ φ. ``discharge`` decides the VCs separately.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

from core.card.types import Card
from core.exceptions import CardkitError, LambdaQTypeError
from core.lambdaq.syntax import (
    ARITH_OPS,
    CMP_OPS,
    NU,
    RESERVED,
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
    TypingContext,
)
from core.logic.smtlib import to_smtlib
from core.logic.solvers import ValidityBackend, ValidityResult
from core.logic.transform import free_vars, rename_store, sort_of, stores_of, substitute
from core.logic.types import (
    BOOL,
    FALSE,
    GLOBAL,
    INT,
    POST,
    PRE,
    REPLICA,
    TRUE,
    Arith,
    Atom,
    BoolLit,
    Cmp,
    Field,
    Formula,
    IntLit,
    Ite,
    Not,
    Select,
    Sort,
    Term,
    Var,
    conj,
    disj,
    eq,
    implies,
)
from shared.utils.logger import get_logger

logger = get_logger("typecheck")


@dataclass(frozen=True)
class VC:
    """A verification condition and the rule application that produced it"""
    formula: Formula
    rule: str
    origin: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.origin}: {self.formula}"


@dataclass(frozen=True)
class VCResult:
    vc: VC
    result: ValidityResult


class _Checker:
    def __init__(self, card: Card):
        self.card = card
        self.vcs: List[VC] = []

    # ------------------------------------------------------------ obligations

    def _oblige(self, ctx: TypingContext, goal: Formula, rule: str, origin: str) -> None:
        vc = implies(ctx.formula(), goal)
        if vc != TRUE:
            self.vcs.append(VC(vc, rule, origin))

    def _fresh_name(self, ctx: TypingContext, name: str) -> None:
        if name in RESERVED:
            raise LambdaQTypeError(f"'{name}' is reserved and cannot be bound", term=name)
        if name in ctx.names():
            raise LambdaQTypeError(f"'{name}' is already bound", term=name)

    # ------------------------------------------------------------ pure terms to logic

    def _sort(self, t: Term) -> Sort:
        try:
            return sort_of(t)
        except CardkitError as e:
            raise LambdaQTypeError(e.message, term=str(t))

    def term(self, ctx: TypingContext, t: LqTerm) -> Term:
        """The logic term denoted by a pure λ^Q term"""
        if isinstance(t, LConst):
            return BoolLit(t.value) if isinstance(t.value, bool) else IntLit(t.value)
        if isinstance(t, LVar):
            ty = ctx.lookup(t.name)
            if isinstance(ty, BaseRef):
                return Var(t.name, ty.sort)
            if t.name in ctx.stores:
                if not self.card.schema.single:
                    raise LambdaQTypeError(
                        f"store '{t.name}' has several fields; use {t.name}.<field>", term=t.name
                    )
                name, sort = self.card.schema.fields[0]
                return Field(t.name, name, sort)
            if ty is not None:
                raise LambdaQTypeError(f"'{t.name}' is not of base type", term=t.name)
            raise LambdaQTypeError(f"unbound variable '{t.name}'", term=t.name)
        if isinstance(t, FieldAccess):
            if not isinstance(t.target, LVar) or t.target.name not in ctx.stores:
                raise LambdaQTypeError(f"field access on a non-store '{t.target}'", term=str(t))
            if t.name not in self.card.schema:
                raise LambdaQTypeError(f"card {self.card.name} has no field '{t.name}'", term=str(t))
            fld: Term = Field(t.target.name, t.name, self.card.schema.sort_of(t.name))
            if t.index is not None:
                fld = Select(fld, self.term(ctx, t.index))
            self._sort(fld)
            return fld
        if isinstance(t, PrimOp) and t.op in ARITH_OPS:
            lhs, rhs = (self.term(ctx, a) for a in t.args)
            result = Arith(t.op, lhs, rhs)
            self._sort(result)
            return result
        if isinstance(t, PrimOp):
            return Ite(self.formula(ctx, t), BoolLit(True), BoolLit(False))
        if isinstance(t, LIte):
            then, orelse = self.term(ctx, t.then), self.term(ctx, t.orelse)
            result = Ite(self.formula(ctx, t.cond), then, orelse)
            self._sort(result)
            return result
        if isinstance(t, App) and isinstance(t.fn, Lambda) and len(t.args) == 1:
            fn = t.fn
            if not isinstance(fn.annotation, BaseRef):
                raise LambdaQTypeError("only base-typed parameters are reflected into the logic", term=str(t))
            arg = self._checked_arg(ctx, t.args[0], fn.annotation, fn.param)
            body = self.term(ctx.bind(fn.param, BaseRef(fn.annotation.sort)), fn.body)
            return substitute(body, {fn.param: arg})
        if isinstance(t, App) and isinstance(t.fn, Lambda) and len(t.args) > 1:
            return self.term(ctx, App(App(t.fn, t.args[:1]), t.args[1:]))
        if isinstance(t, (Query, ReturnEmit)):
            raise LambdaQTypeError("Query under non-Op expected type", term=str(t))
        raise LambdaQTypeError(f"term cannot be used as a value here: {t}", term=str(t))

    def formula(self, ctx: TypingContext, t: LqTerm) -> Formula:
        """The logic formula denoted by a Bool-typed pure λ^Q term"""
        if isinstance(t, LConst):
            if not isinstance(t.value, bool):
                raise LambdaQTypeError(f"expected a boolean, got {t.value}", term=str(t))
            return TRUE if t.value else FALSE
        if isinstance(t, PrimOp) and t.op in CMP_OPS:
            lhs, rhs = (self.term(ctx, a) for a in t.args)
            lhs_sort, rhs_sort = self._sort(lhs), self._sort(rhs)
            if lhs_sort != rhs_sort:
                raise LambdaQTypeError(f"comparison of {lhs_sort} with {rhs_sort}", term=str(t))
            if t.op not in ("==", "!=") and lhs_sort != INT:
                raise LambdaQTypeError(f"'{t.op}' needs integers", term=str(t))
            return Cmp("=" if t.op == "==" else t.op, lhs, rhs)
        if isinstance(t, PrimOp) and t.op == "!":
            return Not(self.formula(ctx, t.args[0]))
        if isinstance(t, PrimOp) and t.op == "&&":
            return conj(*(self.formula(ctx, a) for a in t.args))
        if isinstance(t, PrimOp) and t.op == "||":
            return disj(*(self.formula(ctx, a) for a in t.args))
        if isinstance(t, PrimOp) and t.op == "=>":
            return implies(self.formula(ctx, t.args[0]), self.formula(ctx, t.args[1]))
        if isinstance(t, LIte):
            cond = self.formula(ctx, t.cond)
            return disj(conj(cond, self.formula(ctx, t.then)), conj(Not(cond), self.formula(ctx, t.orelse)))
        term = self.term(ctx, t)
        if self._sort(term) != BOOL:
            raise LambdaQTypeError(f"expected a boolean, got {term}", term=str(t))
        return Atom(term)

    def _checked_arg(self, ctx: TypingContext, arg: LqTerm, expected: BaseRef, name: str) -> Term:
        term = self.term(ctx, arg)
        actual = self._sort(term)
        if actual != expected.sort:
            raise LambdaQTypeError(
                f"argument for '{name}' has sort {actual}, expected {expected.sort}", term=str(arg)
            )
        self._oblige(ctx, expected.at(term), "sub-base", f"argument {arg} for {name}")
        return term

    # ------------------------------------------------------------ checking

    def check(self, ctx: TypingContext, t: LqTerm, expected: RefType, path: str = "") -> None:
        if isinstance(expected, FunType):
            self._check_lambda(ctx, t, expected, path)
        elif isinstance(expected, OpType):
            self._check_op(ctx, t, expected, path)
        elif isinstance(expected, BaseRef):
            if isinstance(t, (Query, ReturnEmit)):
                raise LambdaQTypeError("Query under non-Op expected type", term=str(t))
            term = self.term(ctx, t)
            actual = self._sort(term)
            if actual != expected.sort:
                raise LambdaQTypeError(f"expected {expected.sort}, got {actual}", term=str(t))
            self._oblige(ctx, expected.at(term), "sub-base", f"{t} : {expected}")
        else:
            raise LambdaQTypeError(f"unsupported expected type {expected!r}")

    def _check_lambda(self, ctx: TypingContext, t: LqTerm, expected: FunType, path: str) -> None:
        if not isinstance(t, Lambda):
            raise LambdaQTypeError(f"expected a function of type {expected}", term=str(t))
        self._fresh_name(ctx, t.param)
        if not isinstance(expected.domain, BaseRef):
            raise LambdaQTypeError("higher-order parameters are not supported", term=str(t))
        annotation = t.annotation
        if not isinstance(annotation, BaseRef) or annotation.sort != expected.domain.sort:
            raise LambdaQTypeError(
                f"parameter '{t.param}' annotated {annotation}, expected {expected.domain}", term=str(t)
            )
        inner = ctx.bind(t.param, expected.domain)
        if annotation.refinement != TRUE and annotation != expected.domain:
            self._oblige(
                inner, annotation.at(Var(t.param, annotation.sort)), "type-lambda", f"parameter {t.param}"
            )
        codomain = expected.codomain
        if expected.param != t.param:
            codomain = _rename_in_type(codomain, expected.param, Var(t.param, expected.domain.sort))
        self.check(inner, t.body, codomain, path + f"fun {t.param} > ")

    def _check_op(self, ctx: TypingContext, t: LqTerm, expected: OpType, path: str) -> None:
        if isinstance(t, Query):
            for guard in t.guards:
                if guard not in self.card.guard_names:
                    raise LambdaQTypeError(f"card {self.card.name} has no guard '{guard}'", term=guard)
            self._fresh_name(ctx, t.binder)
            body = self.card.conjunction(t.guards).body
            clause = rename_store(rename_store(body, REPLICA, t.binder), GLOBAL, PRE)
            inner = ctx.bind_store(t.binder).assume(clause)
            self.check(inner, t.body, expected, path + f"query {' && '.join(t.guards)} as {t.binder} > ")
        elif isinstance(t, LIte):
            cond = self.formula(ctx, t.cond)
            self.check(ctx.assume(cond), t.then, expected, path + f"if {t.cond} > ")
            self.check(ctx.assume(Not(cond)), t.orelse, expected, path + f"if !({t.cond}) > ")
        elif isinstance(t, ReturnEmit):
            self._check_emit(ctx, t, expected, path)
        elif isinstance(t, App) and isinstance(t.fn, Lambda):
            fn = t.fn
            if not isinstance(fn.annotation, BaseRef):
                raise LambdaQTypeError("only base-typed parameters are supported", term=str(t))
            if len(t.args) > 1:
                return self._check_op(ctx, App(App(fn, t.args[:1]), t.args[1:]), expected, path)
            self._fresh_name(ctx, fn.param)
            arg = self._checked_arg(ctx, t.args[0], fn.annotation, fn.param)
            sort = fn.annotation.sort
            binding = BaseRef(sort, eq(Var(NU, sort), arg))
            self.check(ctx.bind(fn.param, binding), fn.body, expected, path + f"let {fn.param} > ")
        elif isinstance(t, App) and isinstance(t.fn, App):
            raise LambdaQTypeError("nested application in operation position", term=str(t))
        else:
            raise LambdaQTypeError(f"expected an operation of type {expected}", term=str(t))

    def _check_emit(self, ctx: TypingContext, t: ReturnEmit, expected: OpType, path: str) -> None:
        ctor = t.effect
        if not isinstance(ctor, EffectCtor):
            raise LambdaQTypeError("emit needs an effect constructor", term=str(ctor))
        try:
            effect = self.card.effect(ctor.name)
        except KeyError:
            raise LambdaQTypeError(f"card {self.card.name} has no effect '{ctor.name}'", term=ctor.name)
        if len(ctor.args) != len(effect.params):
            raise LambdaQTypeError(
                f"{effect.name} expects {len(effect.params)} arguments, got {len(ctor.args)}", term=str(ctor)
            )
        bindings = {}
        for param, arg in zip(effect.params, ctor.args):
            term = self.term(ctx, arg)
            if self._sort(term) != param.sort:
                raise LambdaQTypeError(f"argument {arg} of {effect.name} is not {param.sort}", term=str(arg))
            bindings[param.name] = term
        origin = path + f"emit ({ctor}, {t.ret})"
        self._oblige(ctx, substitute(effect.constraint, bindings), "type-r-constraint", origin)

        assignments = effect.assignments
        post = conj(*(
            eq(Field(POST, name, sort), substitute(assignments.get(name, Field(PRE, name, sort)), bindings))
            for name, sort in self.card.schema
        ))
        ret = self.term(ctx, t.ret)
        ret_sort = self._sort(ret)
        if ret_sort != expected.ret.sort:
            raise LambdaQTypeError(
                f"return value has sort {ret_sort}, expected {expected.ret.sort}", term=str(t.ret)
            )
        if expected.ret.refinement != TRUE:
            self._oblige(ctx, expected.ret.at(ret), "type-r-return", origin)
        hypothesis = conj(ctx.formula(), post, eq(Var(RESULT, ret_sort), ret))
        vc = implies(hypothesis, expected.spec)
        if vc != TRUE:
            self.vcs.append(VC(vc, "type-r", origin))


def _rename_in_type(ty: RefType, name: str, var: Var) -> RefType:
    if isinstance(ty, BaseRef):
        return BaseRef(ty.sort, substitute(ty.refinement, {name: var}))
    if isinstance(ty, FunType):
        domain = _rename_in_type(ty.domain, name, var)
        return FunType(ty.param, domain, _rename_in_type(ty.codomain, name, var))
    if isinstance(ty, OpType):
        return OpType(ty.card, _rename_in_type(ty.ret, name, var), substitute(ty.spec, {name: var}))
    return ty


def _check_op_type(card: Card, ty: RefType) -> None:
    while isinstance(ty, FunType):
        ty = ty.codomain
    if not isinstance(ty, OpType):
        return
    if ty.card != card.name:
        raise LambdaQTypeError(f"operation is declared over card {ty.card}, checked against {card.name}")
    foreign = stores_of(ty.spec) - {PRE, POST}
    if foreign:
        raise LambdaQTypeError(f"event specification mentions stores {sorted(foreign)}", term=str(ty.spec))


def typecheck(card: Card, term: LqTerm, expected: RefType) -> List[VC]:
    """
    Check ``term`` against ``expected`` and return the VCs of the derivation.

    Raises:
        LambdaQTypeError: base-type mismatch, unbound variable, or an operation
            term under a non-operation type
    """
    _check_op_type(card, expected)
    checker = _Checker(card)
    checker.check(TypingContext(), term, expected)
    logger.debug(f"{card.name}: {len(checker.vcs)} verification conditions")
    return checker.vcs


def typecheck_op(card: Card, op: OpDef) -> List[VC]:
    for name, _ in op.params:
        if name in RESERVED:
            raise LambdaQTypeError(f"parameter name '{name}' of {op.name} is reserved", term=name)
    spec_vars = {v.name for v in free_vars(op.op_type.spec)} - {RESULT} - {n for n, _ in op.params}
    if spec_vars:
        raise LambdaQTypeError(f"event specification of {op.name} mentions unknown names {sorted(spec_vars)}")
    return typecheck(card, op.term, op.type)


def discharge(vcs: Sequence[VC], backend: ValidityBackend) -> List[VCResult]:
    """Decide every VC with the given backend"""
    return [VCResult(vc, backend.check(vc.formula)) for vc in vcs]


def verdict_of(results: Sequence[VCResult]) -> str:
    """valid, invalid or unknown; invalid dominates unknown"""
    if any(r.result.is_invalid for r in results):
        return "invalid"
    if any(r.result.is_unknown for r in results):
        return "unknown"
    return "valid"


def dump_vcs(vcs: Sequence[VC], directory: Union[str, Path], prefix: str = "vc") -> List[Path]:
    """Write one SMT-LIB2 script per VC; returns the written paths"""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for index, vc in enumerate(vcs):
        path = target / f"{prefix}_{index:03d}.smt2"
        path.write_text(f"; {vc.rule}: {vc.origin}\n{to_smtlib(vc.formula)}", encoding="utf-8")
        written.append(path)
    return written
