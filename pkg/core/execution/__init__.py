"""
D-executions: evaluation, sub-executions, well-formedness and carefulness.
"""

from .checks import (
    check_careful,
    check_invariant,
    check_well_formed,
    eval_execution,
    event_satisfies,
    first_invariant_failure,
    pre_execution,
    prefix_values,
    restrict,
    vis_execution,
)
from .generate import random_execution, random_instance
from .types import ActiveGuard, DExecution, Event, EventSpec, Violation
