"""
File grammars: cards, operations, scenarios and the machine-readable
``key<TAB>value`` output.
"""

from .card_parser import parse_card, serialize_card
from .expr import LogicScope, parse_formula
from .machine import (
    format_items,
    format_store,
    parse_execution,
    parse_instance,
    parse_items,
    parse_store,
    serialize_execution,
)
from .ops_parser import parse_ops, parse_term, render_term, serialize_ops
from .scenario_parser import parse_scenario, serialize_scenario
