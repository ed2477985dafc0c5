"""
Call-by-value evaluation of pure λ^Q terms.
"""

from typing import Any, Mapping, Optional

from core.card.types import StoreValue
from core.exceptions import EvaluationError
from core.lambdaq.syntax import (
    App,
    Closure,
    EffectCtor,
    EffectValue,
    FieldAccess,
    Lambda,
    LConst,
    LIte,
    LqTerm,
    LVar,
    PrimOp,
    Query,
    ReturnEmit,
)

Env = Mapping[str, Any]


def _int(value: Any, op: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise EvaluationError(f"operator '{op}' expects integers, got {value!r}")
    return value


def _bool(value: Any, op: str) -> bool:
    if not isinstance(value, bool):
        raise EvaluationError(f"operator '{op}' expects booleans, got {value!r}")
    return value


def _prim(op: str, args) -> Any:
    if op == "!":
        return not _bool(args[0], op)
    lhs, rhs = args
    if op == "+":
        return _int(lhs, op) + _int(rhs, op)
    if op == "-":
        return _int(lhs, op) - _int(rhs, op)
    if op == "*":
        return _int(lhs, op) * _int(rhs, op)
    if op == "&&":
        return _bool(lhs, op) and _bool(rhs, op)
    if op == "||":
        return _bool(lhs, op) or _bool(rhs, op)
    if op == "=>":
        return (not _bool(lhs, op)) or _bool(rhs, op)
    if op == "==":
        return lhs == rhs
    if op == "!=":
        return lhs != rhs
    if op == "<":
        return _int(lhs, op) < _int(rhs, op)
    if op == "<=":
        return _int(lhs, op) <= _int(rhs, op)
    if op == ">":
        return _int(lhs, op) > _int(rhs, op)
    if op == ">=":
        return _int(lhs, op) >= _int(rhs, op)
    raise EvaluationError(f"unknown operator '{op}'")


def _store_value(value: Any) -> Any:
    """Bare use of a single-field store binder denotes the field value"""
    if isinstance(value, StoreValue) and len(value.items) == 1:
        return value.items[0][1]
    return value


def apply_closure(fn: Any, arg: Any) -> tuple:
    """(body, env) of a closure applied to a value"""
    if not isinstance(fn, Closure):
        raise EvaluationError(f"cannot apply non-function value {fn!r}")
    env = fn.environment()
    env[fn.param] = arg
    return fn.body, env


def eval_pure(term: LqTerm, env: Optional[Env] = None) -> Any:
    """
    Big-step call-by-value evaluation.

    Returns:
        int, bool, Closure, StoreValue or EffectValue

    Raises:
        EvaluationError: stuck term (unbound name, ill-typed operand, operation term)
    """
    env = dict(env or {})
    if isinstance(term, LConst):
        return term.value
    if isinstance(term, LVar):
        if term.name not in env:
            raise EvaluationError(f"unbound name '{term.name}'")
        return _store_value(env[term.name])
    if isinstance(term, Lambda):
        return Closure(term.param, term.body, tuple(sorted(env.items(), key=lambda kv: kv[0])))
    if isinstance(term, App):
        fn = eval_pure(term.fn, env)
        for arg in term.args:
            body, inner = apply_closure(fn, eval_pure(arg, env))
            fn = eval_pure(body, inner)
        return fn
    if isinstance(term, LIte):
        cond = eval_pure(term.cond, env)
        return eval_pure(term.then if _bool(cond, "if") else term.orelse, env)
    if isinstance(term, PrimOp):
        if term.op == "&&":
            return _bool(eval_pure(term.args[0], env), "&&") and _bool(eval_pure(term.args[1], env), "&&")
        if term.op == "||":
            return _bool(eval_pure(term.args[0], env), "||") or _bool(eval_pure(term.args[1], env), "||")
        return _prim(term.op, [eval_pure(a, env) for a in term.args])
    if isinstance(term, FieldAccess):
        if not isinstance(term.target, LVar) or term.target.name not in env:
            raise EvaluationError(f"field access on unknown store '{term.target}'")
        store = env[term.target.name]
        if not isinstance(store, StoreValue):
            raise EvaluationError(f"'{term.target.name}' is not a store")
        try:
            value = store[term.name]
        except KeyError:
            raise EvaluationError(f"store has no field '{term.name}'")
        if term.index is None:
            return value
        index = _int(eval_pure(term.index, env), "[]")
        if not 0 <= index < len(value):
            raise EvaluationError(f"index {index} out of bounds for '{term.name}'")
        return value[index]
    if isinstance(term, EffectCtor):
        return EffectValue(term.name, tuple(eval_pure(a, env) for a in term.args))
    if isinstance(term, (Query, ReturnEmit)):
        raise EvaluationError("operation terms are not pure; use op_execute")
    raise EvaluationError(f"cannot evaluate {term!r}")

