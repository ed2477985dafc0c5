"""
λ^Q: the operation language, its refinement type checker and its
operation-execution semantics.
"""

from .evaluator import eval_pure
from .semantics import EmitPoint, QueryPoint, advance, as_store, op_execute, query_clause, resume
from .syntax import (
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
    OpExecState,
    OpType,
    PrimOp,
    Query,
    RefType,
    ReturnEmit,
    TypingContext,
)
from .typechecker import VC, VCResult, discharge, dump_vcs, typecheck, typecheck_op, verdict_of
