"""
Custom Exception Classes

This module contains the exception hierarchy shared by every cardkit module.
Each exception carries a machine-readable error code and a details dict so the
CLI can report failures uniformly and map them to exit codes.
"""

from typing import Any, Dict, Optional


class CardkitError(Exception):
    """Base class for cardkit exceptions"""

    error_code_default = "CARDKIT_ERROR"

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        error_code: Optional[str] = None
    ):
        self.message = message
        self.details = details or {}
        self.error_code = error_code or self.error_code_default
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the error for machine-readable output"""
        return {
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
        }


class SortError(CardkitError):
    """Ill-sorted term, formula or substitution"""

    error_code_default = "SORT_ERROR"

    def __init__(
        self,
        message: str = "Sort mismatch",
        name: Optional[str] = None,
        expected: Optional[Any] = None,
        actual: Optional[Any] = None,
        **kwargs
    ):
        details = kwargs.get("details", {})
        if name:
            details["name"] = name
        if expected is not None:
            details["expected"] = str(expected)
        if actual is not None:
            details["actual"] = str(actual)
        super().__init__(message, details)


class SchemaError(CardkitError):
    """Store value or effect assignment does not match the store schema"""

    error_code_default = "SCHEMA_ERROR"

    def __init__(self, message: str = "Schema mismatch", field: Optional[str] = None, **kwargs):
        details = kwargs.get("details", {})
        if field:
            details["field"] = field
        super().__init__(message, details)


class CardValidationError(CardkitError):
    """A card failed validation at load time"""

    error_code_default = "CARD_VALIDATION_ERROR"

    def __init__(self, message: str = "Card validation failed", violations: Optional[list] = None, **kwargs):
        details = kwargs.get("details", {})
        if violations:
            details["violations"] = list(violations)
        super().__init__(message, details)


class EvaluationError(CardkitError):
    """Concrete evaluation failed (out-of-bounds index, stuck term, unbound name)"""

    error_code_default = "EVALUATION_ERROR"

    def __init__(self, message: str = "Evaluation failed", **kwargs):
        super().__init__(message, kwargs.get("details", {}))


class SolverError(CardkitError):
    """The SMT solver could not be started or produced unusable output"""

    error_code_default = "SOLVER_ERROR"

    def __init__(
        self,
        message: str = "Solver failure",
        solver: Optional[str] = None,
        output: Optional[str] = None,
        **kwargs
    ):
        details = kwargs.get("details", {})
        if solver:
            details["solver"] = solver
        if output:
            details["output"] = output[:500]
        super().__init__(message, details)


class ParseError(CardkitError):
    """Syntax error in a card, operations, scenario or trace file"""

    error_code_default = "PARSE_ERROR"

    def __init__(
        self,
        message: str = "Parse error",
        source: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        **kwargs
    ):
        details = kwargs.get("details", {})
        if source:
            details["source"] = source
        if line is not None:
            details["line"] = line
        if column is not None:
            details["column"] = column
        location = f"{source or '<input>'}:{line}:{column}: " if line is not None else ""
        super().__init__(f"{location}{message}", details)


class LambdaQTypeError(CardkitError):
    """λ^Q type checking failed before any VC was produced"""

    error_code_default = "TYPE_ERROR"

    def __init__(self, message: str = "Type error", term: Optional[str] = None, **kwargs):
        details = kwargs.get("details", {})
        if term:
            details["term"] = term
        super().__init__(message, details)


class ScheduleError(CardkitError):
    """Operation-execution schedule rejected: a rule premise failed or the schedule ran out"""

    error_code_default = "SCHEDULE_ERROR"

    def __init__(self, message: str = "Schedule rejected", rule: Optional[str] = None, **kwargs):
        details = kwargs.get("details", {})
        if rule:
            details["rule"] = rule
        super().__init__(message, details)


class SimulationError(CardkitError):
    """The replica simulator reached an inconsistent state"""

    error_code_default = "SIMULATION_ERROR"

    def __init__(self, message: str = "Simulation failed", **kwargs):
        super().__init__(message, kwargs.get("details", {}))


class NonQuiescenceError(SimulationError):
    """The simulator did not reach quiescence within the step bound"""

    error_code_default = "NON_QUIESCENCE"

    def __init__(
        self,
        message: str = "Simulation did not quiesce",
        max_steps: Optional[int] = None,
        **kwargs,
    ):
        details = kwargs.get("details", {})
        if max_steps is not None:
            details["max_steps"] = max_steps
        super().__init__(message, details=details)
        self.error_code = "NON_QUIESCENCE"
