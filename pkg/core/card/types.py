"""
CARD types: D = (S, E, C)

A card has a store schema, parametric effect classes with symbolic
assignments, and named two-state guards. Every card carries the builtin
effect class ``NoOp`` and the builtin guards ``Top`` (⊤) and ``EQ`` (identity).
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Mapping, Optional, Sequence, Tuple

from core.exceptions import SchemaError, SortError
from core.logic.evaluate import eval_formula
from core.logic.transform import substitute
from core.logic.types import (
    BOOL,
    GLOBAL,
    INT,
    REPLICA,
    TRUE,
    Field,
    Formula,
    Sort,
    SortKind,
    StoreSchema,
    Term,
    Var,
    array_of,
    conj,
    eq,
    literal,
)

NOOP = "NoOp"
TOP = "Top"
EQ = "EQ"

Value = Any


def value_conforms(value: Value, sort: Sort) -> bool:
    if sort.kind == SortKind.BOOL:
        return isinstance(value, bool)
    if sort.kind == SortKind.INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if not isinstance(value, tuple):
        return False
    if sort.length is not None and len(value) != sort.length:
        return False
    return all(value_conforms(item, sort.element) for item in value)


def infer_sort(value: Value) -> Sort:
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return INT
    element = infer_sort(value[0]) if value else INT
    return array_of(element, len(value))


def render_value(value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    return str(value)


@dataclass(frozen=True)
class StoreValue:
    """Concrete store: field name → value, in schema order"""
    items: Tuple[Tuple[str, Value], ...]

    @classmethod
    def of(cls, schema: StoreSchema, values: Mapping[str, Value]) -> "StoreValue":
        missing = [name for name in schema.names if name not in values]
        if missing:
            raise SchemaError(f"store value lacks fields {missing}", field=missing[0])
        extra = [name for name in values if name not in schema]
        if extra:
            raise SchemaError(f"store value has unknown fields {extra}", field=extra[0])
        for name, sort in schema:
            if not value_conforms(values[name], sort):
                raise SchemaError(f"value {values[name]!r} does not conform to {sort}", field=name)
        return cls(tuple((name, values[name]) for name in schema.names))

    def __getitem__(self, name: str) -> Value:
        for key, value in self.items:
            if key == name:
                return value
        raise KeyError(name)

    def as_dict(self) -> Dict[str, Value]:
        return dict(self.items)

    def replace(self, **updates: Value) -> "StoreValue":
        return StoreValue(tuple((k, updates.get(k, v)) for k, v in self.items))

    def literals(self) -> Dict[str, Term]:
        """Field values as literal terms, for instantiating formulas"""
        return {name: literal(value, infer_sort(value)) for name, value in self.items}

    def __str__(self) -> str:
        if len(self.items) == 1:
            return render_value(self.items[0][1])
        return "(" + ", ".join(f"{k}={render_value(v)}" for k, v in self.items) + ")"


@dataclass(frozen=True)
class Param:
    """Effect or operation parameter; ``index_bound`` marks the sugar ``index[N]``"""
    name: str
    sort: Sort
    constraint: Formula = TRUE
    index_bound: Optional[int] = None

    @property
    def var(self) -> Var:
        domain = (0, self.index_bound - 1) if self.index_bound is not None else None
        return Var(self.name, self.sort, domain)


@dataclass(frozen=True)
class EffectClass:
    """Parametric effect class; ``updates`` over the old store ``s`` and the parameters"""
    name: str
    params: Tuple[Param, ...] = ()
    updates: Tuple[Tuple[str, Term], ...] = ()

    @property
    def assignments(self) -> Dict[str, Term]:
        return dict(self.updates)

    @property
    def param_vars(self) -> Tuple[Var, ...]:
        return tuple(p.var for p in self.params)

    @property
    def constraint(self) -> Formula:
        return conj(*(p.constraint for p in self.params))

    @property
    def index_params(self) -> Tuple[Param, ...]:
        return tuple(p for p in self.params if p.index_bound is not None)

    def instance(self, *args: Value) -> "EffectInstance":
        return EffectInstance(self, tuple(args))

    def __str__(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({', '.join(p.name for p in self.params)})"


@dataclass(frozen=True)
class EffectInstance:
    """Effect class applied to concrete arguments satisfying its constraints"""
    effect: EffectClass
    args: Tuple[Value, ...] = ()

    def __post_init__(self):
        params = self.effect.params
        if len(self.args) != len(params):
            raise SortError(
                f"{self.effect.name} expects {len(params)} arguments, got {len(self.args)}",
                name=self.effect.name,
            )
        for param, arg in zip(params, self.args):
            if not value_conforms(arg, param.sort):
                raise SortError(
                    f"argument {arg!r} of {self.effect.name} is not {param.sort}",
                    name=param.name,
                )
        if not eval_formula(self.effect.constraint, {}, self.bindings):
            raise SchemaError(
                f"arguments {self.args} violate the constraint of {self.effect.name}",
                details={"constraint": str(self.effect.constraint)},
            )

    @property
    def name(self) -> str:
        return self.effect.name

    @property
    def bindings(self) -> Dict[str, Value]:
        return {p.name: a for p, a in zip(self.effect.params, self.args)}

    @property
    def assignments(self) -> Dict[str, Term]:
        args = {p.name: literal(a, p.sort) for p, a in zip(self.effect.params, self.args)}
        return {name: substitute(term, args) for name, term in self.effect.updates}

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(render_value(a) for a in self.args)})"


@dataclass(frozen=True)
class GuardDef:
    """Named reflexive two-state predicate over g (global) and r (replica)"""
    name: str
    body: Formula

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Card:
    """A CARD: store schema, initial value, effect classes and guards"""
    name: str
    schema: StoreSchema
    init: StoreValue
    effects: Tuple[EffectClass, ...]
    guards: Tuple[GuardDef, ...]
    _conjunctions: Dict[Tuple[str, ...], GuardDef] = field(
        default_factory=dict, compare=False, hash=False, repr=False
    )

    @classmethod
    def build(
        cls,
        name: str,
        schema: StoreSchema,
        init: Mapping[str, Value],
        effects: Sequence[EffectClass] = (),
        guards: Sequence[GuardDef] = (),
    ) -> "Card":
        """Assemble a card, adding the builtin NoOp, Top and EQ when absent"""
        effect_list = list(effects)
        if not any(e.name == NOOP for e in effect_list):
            effect_list.insert(0, EffectClass(NOOP))
        guard_list = list(guards)
        if not any(g.name == EQ for g in guard_list):
            guard_list.insert(0, identity_guard(schema))
        if not any(g.name == TOP for g in guard_list):
            guard_list.insert(0, GuardDef(TOP, TRUE))
        store = init if isinstance(init, StoreValue) else StoreValue.of(schema, init)
        return cls(name, schema, store, tuple(effect_list), tuple(guard_list))

    @property
    def effect_names(self) -> Tuple[str, ...]:
        return tuple(e.name for e in self.effects)

    @property
    def guard_names(self) -> Tuple[str, ...]:
        return tuple(g.name for g in self.guards)

    def effect(self, name: str) -> EffectClass:
        for effect in self.effects:
            if effect.name == name:
                return effect
        raise KeyError(f"card {self.name} has no effect class '{name}'")

    def guard(self, name: str) -> GuardDef:
        for guard in self.guards:
            if guard.name == name:
                return guard
        raise KeyError(f"card {self.name} has no guard '{name}'")

    def conjunction(self, names: Sequence[str]) -> GuardDef:
        """Guard for a conjunction of named guards (a single name returns that guard)"""
        key = tuple(names)
        if len(key) == 1:
            return self.guard(key[0])
        if key not in self._conjunctions:
            body = conj(*(self.guard(n).body for n in key))
            self._conjunctions[key] = GuardDef(" && ".join(key), body)
        return self._conjunctions[key]

    def instance(self, name: str, *args: Value) -> EffectInstance:
        return self.effect(name).instance(*args)

    def iter_fields(self) -> Iterator[Tuple[str, Sort]]:
        return iter(self.schema)


def identity_guard(schema: StoreSchema) -> GuardDef:
    """EQ: every field of g equals the same field of r"""
    return GuardDef(
        EQ,
        conj(*(eq(Field(GLOBAL, name, sort), Field(REPLICA, name, sort)) for name, sort in schema)),
    )

