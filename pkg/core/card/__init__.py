"""
CARD definitions D = (S, E, C) and their concrete semantics.
"""

from .semantics import (
    compose_effects,
    denote_effect,
    guard_eval,
    holds,
    random_store,
    validate_card,
)
from .types import (
    EQ,
    NOOP,
    TOP,
    Card,
    EffectClass,
    EffectInstance,
    GuardDef,
    Param,
    StoreValue,
    identity_guard,
    render_value,
)
