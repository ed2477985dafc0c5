"""
Validity checking backends

``check_valid(f, backend)`` answers Valid, Invalid (with a witness) or Unknown.
Three backends implement the same interface:

- ProcessSolver: one SMT-LIB2 child process per query (z3, cvc5, ...)
- Z3Solver: the in-process z3 binding fed the same SMT-LIB2 text
- EnumerationSolver: bounded evaluation over a finite domain

Solver failures and timeouts yield Unknown, never Valid.
"""

import itertools
import os
import random
import shlex
import shutil
import subprocess
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from core.exceptions import EvaluationError, SolverError
from core.logic.evaluate import Evaluator
from core.logic.smtlib import field_symbol, smtlib_body, to_smtlib, var_symbol
from core.logic.transform import free_vars, store_fields, strip_foralls
from core.logic.types import Field, Formula, SortKind, Var
from shared.utils.logger import get_logger

logger = get_logger("solver")


class Verdict(Enum):
    VALID = "valid"
    INVALID = "invalid"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ValidityResult:
    """Outcome of a validity query"""
    verdict: Verdict
    witness: Optional[Dict[str, Any]] = None
    backend: str = ""
    exhaustive: bool = True
    reason: str = ""
    elapsed_ms: float = 0.0

    @property
    def is_valid(self) -> bool:
        return self.verdict == Verdict.VALID

    @property
    def is_invalid(self) -> bool:
        return self.verdict == Verdict.INVALID

    @property
    def is_unknown(self) -> bool:
        return self.verdict == Verdict.UNKNOWN


class ValidityBackend(ABC):
    """Interface shared by all validity backends; results are cached per query"""

    name: str = "backend"

    def __init__(self):
        self._cache: Dict[Any, ValidityResult] = {}
        self._lock = threading.Lock()
        self.queries = 0
        self.cache_hits = 0

    def check(self, f: Formula) -> ValidityResult:
        key = self._cache_key(f)
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self.cache_hits += 1
                return cached
        started = time.perf_counter()
        result = self._check(f)
        elapsed = (time.perf_counter() - started) * 1000
        result = ValidityResult(
            result.verdict, result.witness, self.name, result.exhaustive, result.reason, elapsed
        )
        logger.debug(f"{self.name}: {result.verdict.value} in {elapsed:.1f} ms")
        with self._lock:
            self.queries += 1
            self._cache[key] = result
        return result

    def _cache_key(self, f: Formula) -> Any:
        return to_smtlib(f)

    @abstractmethod
    def _check(self, f: Formula) -> ValidityResult:
        """Run the query without consulting the cache"""


def check_valid(f: Formula, backend: ValidityBackend) -> ValidityResult:
    """Validity of a closed formula under the given backend"""
    return backend.check(f)


# ---------------------------------------------------------------- SMT output parsing


def _tokenize(text: str) -> Iterator[str]:
    token = ""
    for ch in text:
        if ch in "()":
            if token:
                yield token
                token = ""
            yield ch
        elif ch.isspace():
            if token:
                yield token
                token = ""
        else:
            token += ch
    if token:
        yield token


def parse_sexprs(text: str) -> List[Any]:
    """Parse a sequence of s-expressions into nested lists of atoms"""
    stack: List[List[Any]] = [[]]
    for token in _tokenize(text):
        if token == "(":
            stack.append([])
        elif token == ")":
            if len(stack) == 1:
                raise SolverError("unbalanced solver output", output=text)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(token)
    return stack[0]


def _unparse(expr: Any) -> str:
    if isinstance(expr, list):
        return "(" + " ".join(_unparse(e) for e in expr) + ")"
    return expr


def _model_value(expr: Any) -> Any:
    if isinstance(expr, str):
        if expr == "true":
            return True
        if expr == "false":
            return False
        try:
            return int(expr)
        except ValueError:
            return expr
    if len(expr) == 2 and expr[0] == "-" and isinstance(expr[1], str) and expr[1].isdigit():
        return -int(expr[1])
    return _unparse(expr)


def parse_model(text: str) -> Dict[str, Any]:
    """Extract constant definitions from a get-model response"""
    model: Dict[str, Any] = {}

    def visit(expr: Any) -> None:
        if not isinstance(expr, list):
            return
        if len(expr) == 5 and expr[0] == "define-fun" and expr[2] == []:
            model[expr[1]] = _model_value(expr[4])
            return
        for item in expr:
            visit(item)

    for expr in parse_sexprs(text):
        visit(expr)
    return model


# ---------------------------------------------------------------- process backend


def solver_command(solver: str) -> List[str]:
    """Command line reading an SMT-LIB2 script from standard input"""
    parts = shlex.split(solver)
    if len(parts) > 1:
        return parts
    base = os.path.basename(parts[0]).lower()
    if base.startswith("z3"):
        return parts + ["-in", "-smt2"]
    if base.startswith("cvc"):
        return parts + ["--lang", "smt2", "--produce-models"]
    return parts


class ProcessSolver(ValidityBackend):
    """One child process per query over standard input/output"""

    name = "solver"

    def __init__(self, solver: str = "z3", timeout: float = 10.0):
        super().__init__()
        self.command = solver_command(solver)
        self.timeout = timeout

    def _check(self, f: Formula) -> ValidityResult:
        script = to_smtlib(f) + "(get-model)\n"
        try:
            proc = subprocess.run(
                self.command,
                input=script,
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except subprocess.TimeoutExpired:
            logger.warning(f"solver timed out after {self.timeout}s")
            return ValidityResult(Verdict.UNKNOWN, reason="timeout")
        except OSError as e:
            logger.warning(f"solver process failed: {e}")
            return ValidityResult(Verdict.UNKNOWN, reason=f"process failure: {e}")

        lines = proc.stdout.strip().splitlines()
        status = lines[0].strip() if lines else ""
        if status == "unsat":
            return ValidityResult(Verdict.VALID)
        if status == "sat":
            try:
                witness = parse_model("\n".join(lines[1:]))
            except SolverError:
                witness = {}
            return ValidityResult(Verdict.INVALID, witness=witness)
        reason = status or proc.stderr.strip()[:200] or f"exit code {proc.returncode}"
        logger.warning(f"solver returned no verdict: {reason}")
        return ValidityResult(Verdict.UNKNOWN, reason=reason)


# ---------------------------------------------------------------- z3 binding


class Z3Solver(ValidityBackend):
    """The z3 Python binding, fed the same SMT-LIB2 text as the process backend"""

    name = "z3"

    def __init__(self, timeout: float = 10.0):
        super().__init__()
        import z3

        self._z3 = z3
        self.timeout = timeout

    def _check(self, f: Formula) -> ValidityResult:
        z3 = self._z3
        try:
            assertions = z3.parse_smt2_string(smtlib_body(f))
            solver = z3.Solver()
            solver.set("timeout", int(self.timeout * 1000))
            solver.add(assertions)
            outcome = solver.check()
        except z3.Z3Exception as e:
            logger.warning(f"z3 rejected the query: {e}")
            return ValidityResult(Verdict.UNKNOWN, reason=str(e))
        if outcome == z3.unsat:
            return ValidityResult(Verdict.VALID)
        if outcome == z3.sat:
            model = solver.model()
            witness: Dict[str, Any] = {}
            for decl in model.decls():
                value = model[decl]
                if z3.is_int_value(value):
                    witness[decl.name()] = value.as_long()
                elif z3.is_true(value):
                    witness[decl.name()] = True
                elif z3.is_false(value):
                    witness[decl.name()] = False
                else:
                    witness[decl.name()] = str(value)
            return ValidityResult(Verdict.INVALID, witness=witness)
        return ValidityResult(Verdict.UNKNOWN, reason=str(solver.reason_unknown()))


# ---------------------------------------------------------------- enumeration


def ordered_range(lo: int, hi: int) -> Tuple[int, ...]:
    """Integers of [lo, hi] ordered by absolute value, non-negative first"""
    return tuple(sorted(range(lo, hi + 1), key=lambda v: (abs(v), v < 0)))


class EnumerationSolver(ValidityBackend):
    """
    Bounded validity oracle.

    Store fields range over ``int_domain`` (booleans over both values, arrays
    elementwise). Top-level quantified parameters are hoisted and, like nested
    quantifiers, range over ``param_domain`` unless the variable carries its own
    domain. Spaces larger than ``budget`` are sampled with a seeded generator and
    reported as non-exhaustive.
    """

    name = "enumeration"

    def __init__(
        self,
        int_domain: Tuple[int, int] = (-8, 8),
        param_domain: Tuple[int, int] = (-4, 4),
        budget: int = 200_000,
        sample_size: int = 3000,
        seed: int = 0,
    ):
        super().__init__()
        self.int_values = ordered_range(*int_domain)
        self.param_values = ordered_range(*param_domain)
        self.budget = budget
        self.sample_size = sample_size
        self.seed = seed

    def _cache_key(self, f: Formula) -> Any:
        return f

    def domain_for(self, var: Var) -> Sequence[int]:
        if var.sort.kind == SortKind.BOOL:
            return (False, True)
        if var.domain is not None:
            return ordered_range(*var.domain)
        return self.param_values

    def _field_values(self, fld: Field) -> Optional[Sequence[Any]]:
        sort = fld.sort
        if sort.kind == SortKind.INT:
            return self.int_values
        if sort.kind == SortKind.BOOL:
            return (False, True)
        if sort.element.kind == SortKind.ARRAY:
            return None
        element = (False, True) if sort.element.kind == SortKind.BOOL else self.int_values
        size = len(element) ** (sort.length or 0)
        if size > self.budget:
            return None
        return tuple(itertools.product(element, repeat=sort.length))

    def _random_field(self, rng: random.Random, fld: Field) -> Any:
        return self._random_value(rng, fld.sort)

    def _random_value(self, rng: random.Random, sort) -> Any:
        if sort.kind == SortKind.INT:
            return rng.choice(self.int_values)
        if sort.kind == SortKind.BOOL:
            return rng.random() < 0.5
        return tuple(self._random_value(rng, sort.element) for _ in range(sort.length or 0))

    def _check(self, f: Formula) -> ValidityResult:
        hoisted, body = strip_foralls(f)
        fields = sorted(store_fields(body), key=field_symbol)
        hoisted_names = {v.name for v in hoisted}
        variables = sorted(free_vars(body), key=var_symbol)

        axes: List[Tuple[str, Any, Optional[Sequence[Any]]]] = []
        for fld in fields:
            axes.append((field_symbol(fld), fld, self._field_values(fld)))
        for var in variables:
            if var.name in hoisted_names or var.domain is not None or var.sort.kind == SortKind.BOOL:
                values: Sequence[Any] = self.domain_for(var)
            else:
                values = self.int_values
            axes.append((var_symbol(var), var, values))

        size = 1
        for _, _, values in axes:
            size = size * len(values) if values is not None and size <= self.budget else self.budget + 1
        exhaustive = size <= self.budget

        if exhaustive:
            assignments = itertools.product(*(values for _, _, values in axes))
        else:
            assignments = self._samples(axes)

        for assignment in assignments:
            stores: Dict[str, Dict[str, Any]] = {}
            params: Dict[str, Any] = {}
            for (_, item, _), value in zip(axes, assignment):
                if isinstance(item, Field):
                    stores.setdefault(item.store, {})[item.name] = value
                else:
                    params[item.name] = value
            try:
                holds = Evaluator(stores, params, self.domain_for).formula(body)
            except EvaluationError:
                continue
            if not holds:
                witness = {name: value for (name, _, _), value in zip(axes, assignment)}
                return ValidityResult(Verdict.INVALID, witness=witness, exhaustive=exhaustive)
        return ValidityResult(
            Verdict.VALID,
            exhaustive=exhaustive,
            reason="" if exhaustive else f"sampled {self.sample_size} assignments",
        )

    def _samples(self, axes) -> Iterator[Tuple[Any, ...]]:
        rng = random.Random(self.seed)
        by_name: Dict[str, List[int]] = {}
        for position, (_, item, _) in enumerate(axes):
            if isinstance(item, Field):
                by_name.setdefault(item.name, []).append(position)
        for _ in range(self.sample_size):
            row: List[Any] = []
            for _, item, values in axes:
                if values is not None:
                    row.append(rng.choice(values))
                else:
                    row.append(self._random_field(rng, item))
            # half of the samples keep same-named fields close across stores
            if rng.random() < 0.5:
                for positions in by_name.values():
                    base = row[positions[0]]
                    for position in positions[1:]:
                        row[position] = self._perturb(rng, base, axes[position][1].sort)
            yield tuple(row)

    def _perturb(self, rng: random.Random, value: Any, sort) -> Any:
        if rng.random() < 0.5:
            return value
        if isinstance(value, tuple):
            items = list(value)
            position = rng.randrange(len(items))
            items[position] = self._random_value(rng, sort.element)
            return tuple(items)
        return self._random_value(rng, sort)


# ---------------------------------------------------------------- factory


def make_backend(settings=None, kind: Optional[str] = None) -> ValidityBackend:
    """
    Build the configured backend.

    Args:
        settings: Settings instance (defaults to the global one)
        kind: "solver" or "enumeration"; overrides settings.backend

    Returns:
        A ready backend; "solver" prefers an explicit binary, then ``z3`` on
        PATH, then the in-process binding.
    """
    if settings is None:
        from shared.config.settings import get_settings

        settings = get_settings()
    kind = kind or settings.backend
    if kind == "enumeration":
        return EnumerationSolver(
            settings.int_domain,
            settings.param_domain,
            settings.enumeration_budget,
            seed=settings.enumeration_seed,
        )
    if settings.solver:
        return ProcessSolver(settings.solver, settings.solver_timeout)
    found = shutil.which("z3")
    if found:
        return ProcessSolver(found, settings.solver_timeout)
    try:
        return Z3Solver(settings.solver_timeout)
    except ImportError:
        raise SolverError("no SMT solver available: set CARDKIT_SOLVER or install z3-solver")
