"""
Formula language over store states, with substitution, effect application and
validity checking (external SMT solver, z3 binding or bounded enumeration).
"""

from .evaluate import Evaluator, eval_formula, eval_term
from .smtlib import to_smtlib
from .solvers import (
    EnumerationSolver,
    ProcessSolver,
    ValidityBackend,
    ValidityResult,
    Verdict,
    Z3Solver,
    check_valid,
    make_backend,
)
from .transform import (
    Side,
    apply_assignments,
    apply_effect,
    check_sorts,
    free_vars,
    instantiate_store,
    rename_store,
    simplify,
    sort_of,
    store_fields,
    substitute,
    substitute_fields,
)
from .types import (
    BOOL,
    FALSE,
    GLOBAL,
    INT,
    POST,
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
    Not,
    Or,
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
    eq,
    forall,
    iff,
    implies,
    literal,
)
