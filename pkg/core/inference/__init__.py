"""
Conflict inference: immediate accords, weakest consistency preconditions and
transitive accord sets.
"""

from .accord import (
    AccordReport,
    AccordStatus,
    AccordTable,
    accord_for,
    conflict_table,
    ia_formula,
    ia_report,
    immediate_accord,
    tas_fixed_point,
    wcp,
)
