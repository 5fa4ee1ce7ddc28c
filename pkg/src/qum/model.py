"""Core domain model: components, state machines, transitions, validation.

A model is a set of components. Each component carries at most one normal
behavior state machine, one or more failure pattern machines, a list of named
rates, and integer attributes. Transitions are stochastic (explicit or named
rate), operation calls/triggers, repairs, or plain. States may be tagged as
members of named state configurations (AND/OR over the tagged states).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional

GUARD_OPS = ("<", "<=", ">", ">=", "=", "!=")


class TransitionKind(Enum):
    PLAIN = "plain"
    STOCHASTIC = "stochastic"
    FAILURE = "failure"
    REPAIR = "repair"
    CALL = "call"
    TRIGGER = "trigger"


# Kinds that must carry a rate, either explicit or named.
RATED_KINDS = (TransitionKind.STOCHASTIC, TransitionKind.FAILURE, TransitionKind.REPAIR)


@dataclass(frozen=True)
class RateEntry:
    name: str
    value: float


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    lo: int
    hi: int
    init: int


@dataclass(frozen=True)
class Guard:
    """Comparison of a component-local integer attribute with a constant."""

    attr: str
    op: str
    value: int

    def holds(self, attr_value: int) -> bool:
        if self.op == "<":
            return attr_value < self.value
        if self.op == "<=":
            return attr_value <= self.value
        if self.op == ">":
            return attr_value > self.value
        if self.op == ">=":
            return attr_value >= self.value
        if self.op == "=":
            return attr_value == self.value
        if self.op == "!=":
            return attr_value != self.value
        raise ValueError(f"unknown guard operator {self.op!r}")

    def render(self, prefix: str = "") -> str:
        # Equality is compact, every other comparison is spaced.
        if self.op == "=":
            return f"{prefix}{self.attr}={self.value}"
        return f"{prefix}{self.attr} {self.op} {self.value}"


@dataclass(frozen=True)
class ConfigTag:
    """Marks the carrying state as a member of a named state configuration."""

    config: str
    operator: str  # "and" | "or"


@dataclass(frozen=True)
class State:
    name: str
    children: tuple["State", ...] = ()
    initial: Optional[str] = None  # direct child name, required iff composite
    entry_ops: tuple[str, ...] = ()
    tags: tuple[ConfigTag, ...] = ()

    @property
    def is_composite(self) -> bool:
        return bool(self.children)


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    kind: TransitionKind
    rate: Optional[float] = None
    rate_name: Optional[str] = None
    operation: Optional[str] = None
    guard: Optional[Guard] = None
    name: Optional[str] = None

    @property
    def label(self) -> str:
        """Event label used in traces and counterexample paths."""
        if self.name:
            return self.name
        if self.operation:
            return self.operation
        if self.rate_name:
            return self.rate_name
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class FailureEntry:
    """How a failure pattern machine is entered from normal behavior.

    The entry transition is replicated from every normal leaf state into the
    machine's initial state. `ops` are operations the failure may interact
    with; they are checked against the declared operations but carry no
    behavior of their own.
    """

    name: str
    rate: Optional[float] = None
    rate_name: Optional[str] = None
    guard: Optional[Guard] = None
    ops: tuple[str, ...] = ()


@dataclass(frozen=True)
class StateMachine:
    name: str
    states: tuple[State, ...] = ()
    initial: Optional[str] = None
    transitions: tuple[Transition, ...] = ()
    entry: Optional[FailureEntry] = None  # set iff this is a failure machine


@dataclass(frozen=True)
class QumComponent:
    name: str
    normal: Optional[StateMachine] = None
    failures: tuple[StateMachine, ...] = ()
    rates: tuple[RateEntry, ...] = ()
    attributes: tuple[AttributeDecl, ...] = ()

    def rate_value(self, name: str) -> Optional[float]:
        for entry in self.rates:
            if entry.name == name:
                return entry.value
        return None

    def attribute(self, name: str) -> Optional[AttributeDecl]:
        for decl in self.attributes:
            if decl.name == name:
                return decl
        return None


@dataclass(frozen=True)
class OperationSignature:
    """Directed operation: exactly one calling and one triggered component."""

    name: str
    caller: str
    callee: str


@dataclass(frozen=True)
class StateConfiguration:
    """Named AND/OR combination of states, aggregated from state tags."""

    name: str
    operator: str  # "and" | "or"
    members: tuple[tuple[str, str], ...]  # (component name, state name)


@dataclass(frozen=True)
class QumModel:
    name: str
    components: tuple[QumComponent, ...] = ()
    operations: tuple[OperationSignature, ...] = ()
    state_configs: tuple[StateConfiguration, ...] = ()

    def component(self, name: str) -> Optional[QumComponent]:
        for comp in self.components:
            if comp.name == name:
                return comp
        return None

    def config(self, name: str) -> Optional[StateConfiguration]:
        for cfg in self.state_configs:
            if cfg.name == name:
                return cfg
        return None


# ---------------------------------------------------------------------------
# Walking helpers


def iter_states(states: tuple[State, ...]) -> Iterator[State]:
    """Pre-order walk over a state forest."""
    for state in states:
        yield state
        yield from iter_states(state.children)


def iter_machines(component: QumComponent) -> Iterator[StateMachine]:
    if component.normal is not None:
        yield component.normal
    yield from component.failures


def leaf_names(states: tuple[State, ...]) -> list[str]:
    out: list[str] = []
    for state in iter_states(states):
        if not state.is_composite:
            out.append(state.name)
    return out


def find_state(states: tuple[State, ...], name: str) -> Optional[State]:
    for state in iter_states(states):
        if state.name == name:
            return state
    return None


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.where}: {self.message}"


class InvalidModel(Exception):
    """Raised by validate(); carries every violation found."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        lines = "\n".join(str(v) for v in violations)
        super().__init__(f"{len(violations)} violation(s)\n{lines}")


class UnknownState(KeyError):
    """A state name was looked up that the component does not declare."""


def _check_machine_states(
    machine: StateMachine,
    where: str,
    out: list[Violation],
) -> None:
    seen: set[str] = set()
    for state in iter_states(machine.states):
        if state.name in seen:
            out.append(
                Violation("DuplicateName", where, f"state {state.name!r} declared twice")
            )
        seen.add(state.name)
        if state.is_composite:
            child_names = [c.name for c in state.children]
            if state.initial is None:
                out.append(
                    Violation(
                        "MissingInitial",
                        f"{where} / state {state.name}",
                        "composite state has no initial child",
                    )
                )
            elif state.initial not in child_names:
                out.append(
                    Violation(
                        "DanglingStateRef",
                        f"{where} / state {state.name}",
                        f"initial {state.initial!r} is not a direct child",
                    )
                )
        elif state.initial is not None:
            out.append(
                Violation(
                    "DanglingStateRef",
                    f"{where} / state {state.name}",
                    "leaf state carries an initial marker",
                )
            )
        for tag in state.tags:
            if tag.operator not in ("and", "or"):
                out.append(
                    Violation(
                        "MixedOperatorConfig",
                        f"{where} / state {state.name}",
                        f"config {tag.config!r} has operator {tag.operator!r}",
                    )
                )

    top_names = [s.name for s in machine.states]
    if machine.states:
        if machine.initial is None:
            out.append(Violation("MissingInitial", where, "machine has no initial state"))
        elif machine.initial not in top_names:
            out.append(
                Violation(
                    "DanglingStateRef",
                    where,
                    f"initial {machine.initial!r} is not a top-level state",
                )
            )


def _check_guard(
    comp: QumComponent, guard: Optional[Guard], where: str, out: list[Violation]
) -> None:
    if guard is None:
        return
    if guard.op not in GUARD_OPS:
        out.append(Violation("BadGuard", where, f"unknown operator {guard.op!r}"))
    decl = comp.attribute(guard.attr)
    if decl is None:
        out.append(
            Violation(
                "UnknownAttribute", where, f"guard references undeclared {guard.attr!r}"
            )
        )


def _check_rate_ref(
    comp: QumComponent,
    rate: Optional[float],
    rate_name: Optional[str],
    required: bool,
    where: str,
    out: list[Violation],
) -> None:
    if rate is not None and rate_name is not None:
        out.append(
            Violation("MissingRate", where, "both explicit rate and rate name given")
        )
        return
    if rate_name is not None and comp.rate_value(rate_name) is None:
        out.append(
            Violation(
                "MissingRate",
                where,
                f"rate name {rate_name!r} not in the component's rates list",
            )
        )
    if required and rate is None and rate_name is None:
        out.append(Violation("MissingRate", where, "no rate given"))


def collect_violations(model: QumModel) -> list[Violation]:
    out: list[Violation] = []
    comp_names: set[str] = set()
    for comp in model.components:
        if comp.name in comp_names:
            out.append(
                Violation("DuplicateName", "model", f"component {comp.name!r} declared twice")
            )
        comp_names.add(comp.name)

    op_names: set[str] = set()
    for op in model.operations:
        if op.name in op_names:
            # One global action namespace, so operation names cannot repeat
            # even across different owners.
            out.append(
                Violation("DuplicateName", "operations", f"operation {op.name!r} declared twice")
            )
        op_names.add(op.name)
        for role, comp_name in (("caller", op.caller), ("callee", op.callee)):
            if model.component(comp_name) is None:
                out.append(
                    Violation(
                        "UnboundOperation",
                        f"operation {op.name}",
                        f"{role} {comp_name!r} is not a component",
                    )
                )

    declared_ops = {op.name: op for op in model.operations}
    # (operation, role) pairs that actually occur on transitions
    uses: dict[tuple[str, str], list[str]] = {}

    for comp in model.components:
        cwhere = f"component {comp.name}"
        machine_names: set[str] = set()
        rate_names: set[str] = set()
        for entry in comp.rates:
            if entry.name in rate_names:
                out.append(
                    Violation("DuplicateName", cwhere, f"rate {entry.name!r} declared twice")
                )
            rate_names.add(entry.name)
        attr_names: set[str] = set()
        for decl in comp.attributes:
            if decl.name in attr_names:
                out.append(
                    Violation("DuplicateName", cwhere, f"attribute {decl.name!r} declared twice")
                )
            attr_names.add(decl.name)
            if not (decl.lo <= decl.init <= decl.hi):
                out.append(
                    Violation(
                        "AttributeBounds",
                        f"{cwhere} / attribute {decl.name}",
                        f"init {decl.init} outside [{decl.lo}..{decl.hi}]",
                    )
                )

        all_states: dict[str, str] = {}  # state name -> machine name
        for machine in iter_machines(comp):
            if machine.name in machine_names:
                out.append(
                    Violation("DuplicateName", cwhere, f"machine {machine.name!r} declared twice")
                )
            machine_names.add(machine.name)
            for state in iter_states(machine.states):
                if state.name in all_states:
                    out.append(
                        Violation(
                            "DuplicateName",
                            f"{cwhere} / machine {machine.name}",
                            f"state {state.name!r} also declared in machine "
                            f"{all_states[state.name]!r}",
                        )
                    )
                all_states[state.name] = machine.name

        for machine in iter_machines(comp):
            is_failure = machine.entry is not None
            mwhere = f"{cwhere} / machine {machine.name}"
            _check_machine_states(machine, mwhere, out)

            if is_failure and not machine.states:
                out.append(Violation("EmptyFailureMachine", mwhere, "no states declared"))
            if is_failure:
                entry = machine.entry
                ewhere = f"{mwhere} / entry {entry.name}"
                _check_rate_ref(comp, entry.rate, entry.rate_name, True, ewhere, out)
                _check_guard(comp, entry.guard, ewhere, out)
                for op_name in entry.ops:
                    if op_name not in declared_ops:
                        out.append(
                            Violation(
                                "UnboundOperation",
                                ewhere,
                                f"references undeclared operation {op_name!r}",
                            )
                        )

            machine_states = {s.name for s in iter_states(machine.states)}
            for idx, trans in enumerate(machine.transitions):
                twhere = f"{mwhere} / transition {idx} ({trans.source}->{trans.target})"
                if trans.source not in machine_states:
                    out.append(
                        Violation(
                            "DanglingStateRef", twhere, f"unknown source {trans.source!r}"
                        )
                    )
                target_known = trans.target in all_states
                if not target_known:
                    out.append(
                        Violation(
                            "DanglingStateRef", twhere, f"unknown target {trans.target!r}"
                        )
                    )
                if target_known and trans.target not in machine_states:
                    # Leaving the machine: only repairs may go back to normal
                    # behavior, and normal behavior may not jump into a failure
                    # pattern except through its declared entry.
                    if is_failure and trans.kind is not TransitionKind.REPAIR:
                        out.append(
                            Violation(
                                "CrossMachine",
                                twhere,
                                "transition leaves a failure pattern without repair kind",
                            )
                        )
                    if not is_failure:
                        out.append(
                            Violation(
                                "CrossMachine",
                                twhere,
                                "normal behavior may not target a failure pattern state",
                            )
                        )
                if trans.kind in RATED_KINDS:
                    _check_rate_ref(comp, trans.rate, trans.rate_name, True, twhere, out)
                elif trans.rate_name is not None:
                    _check_rate_ref(comp, trans.rate, trans.rate_name, False, twhere, out)
                if trans.kind in (TransitionKind.CALL, TransitionKind.TRIGGER):
                    op_name = trans.operation
                    if op_name is None or op_name not in declared_ops:
                        out.append(
                            Violation(
                                "UnboundOperation",
                                twhere,
                                f"{trans.kind.value} of undeclared operation {op_name!r}",
                            )
                        )
                    else:
                        sig = declared_ops[op_name]
                        role = "caller" if trans.kind is TransitionKind.CALL else "callee"
                        expected = sig.caller if role == "caller" else sig.callee
                        if expected != comp.name:
                            out.append(
                                Violation(
                                    "UnboundOperation",
                                    twhere,
                                    f"operation {op_name!r} {role} is {expected!r}, "
                                    f"not {comp.name!r}",
                                )
                            )
                        else:
                            uses.setdefault((op_name, role), []).append(comp.name)
                elif trans.operation is not None:
                    out.append(
                        Violation(
                            "UnboundOperation",
                            twhere,
                            "operation given on a non-call, non-trigger transition",
                        )
                    )
                _check_guard(comp, trans.guard, twhere, out)

            for state in iter_states(machine.states):
                for op_name in state.entry_ops:
                    if op_name not in declared_ops:
                        out.append(
                            Violation(
                                "UnboundOperation",
                                f"{mwhere} / state {state.name}",
                                f"entry action references undeclared operation {op_name!r}",
                            )
                        )

    for op in model.operations:
        if (op.name, "caller") not in uses:
            out.append(
                Violation(
                    "UnboundOperation",
                    f"operation {op.name}",
                    f"never called by {op.caller!r}",
                )
            )
        if (op.name, "callee") not in uses:
            out.append(
                Violation(
                    "UnboundOperation",
                    f"operation {op.name}",
                    f"never triggers a transition in {op.callee!r}",
                )
            )

    out.extend(_config_violations(model))
    return out


def _walk_tags(model: QumModel) -> Iterator[tuple[str, State, ConfigTag]]:
    for comp in model.components:
        for machine in iter_machines(comp):
            for state in iter_states(machine.states):
                for tag in state.tags:
                    yield comp.name, state, tag


def _config_violations(model: QumModel) -> list[Violation]:
    out: list[Violation] = []
    operator_by_config: dict[str, str] = {}
    for comp_name, state, tag in _walk_tags(model):
        prior = operator_by_config.get(tag.config)
        if prior is None:
            operator_by_config[tag.config] = tag.operator
        elif prior != tag.operator:
            out.append(
                Violation(
                    "MixedOperatorConfig",
                    f"component {comp_name} / state {state.name}",
                    f"config {tag.config!r} tagged {tag.operator!r} here "
                    f"but {prior!r} elsewhere",
                )
            )
    return out


def aggregate_configs(model: QumModel) -> tuple[StateConfiguration, ...]:
    """Collect state tags into configurations, in first-encounter order."""
    order: list[str] = []
    operators: dict[str, str] = {}
    members: dict[str, list[tuple[str, str]]] = {}
    for comp_name, state, tag in _walk_tags(model):
        if tag.config not in operators:
            order.append(tag.config)
            operators[tag.config] = tag.operator
            members[tag.config] = []
        members[tag.config].append((comp_name, state.name))
    return tuple(
        StateConfiguration(name, operators[name], tuple(members[name])) for name in order
    )


def validate(model: QumModel) -> QumModel:
    """Check the model and return it with aggregated state configurations.

    Raises InvalidModel carrying the full violation list when anything is
    wrong; validation is total and reports every problem it can find.
    """
    violations = collect_violations(model)
    if violations:
        raise InvalidModel(violations)
    return replace(model, state_configs=aggregate_configs(model))


# ---------------------------------------------------------------------------
# Integer state numbering


@dataclass
class StateEncoding:
    """Integer ids for one component's merged state tree.

    Ids are assigned in pre-order: the normal tree first (composites included),
    then each failure machine's tree in declaration order. Components without
    a normal machine get a synthetic idle state with id 0 that carries no name.
    """

    component: str
    ids: dict[str, int]
    spans: dict[str, tuple[int, int]]  # subtree id range per state, inclusive
    normstate_count: int
    total_count: int
    init_id: int
    synthetic_idle: bool
    leaf_ids: tuple[int, ...]  # every non-composite id, normal first
    names_by_id: dict[int, str]

    def id_of(self, state: str) -> int:
        try:
            return self.ids[state]
        except KeyError:
            raise UnknownState(f"{self.component} has no state {state!r}") from None

    def span_of(self, state: str) -> tuple[int, int]:
        try:
            return self.spans[state]
        except KeyError:
            raise UnknownState(f"{self.component} has no state {state!r}") from None


def _resolve_initial_leaf(states: tuple[State, ...], initial: Optional[str]) -> Optional[str]:
    """Descend initial markers from a top-level name down to a leaf."""
    if initial is None:
        return None
    current = None
    for state in states:
        if state.name == initial:
            current = state
            break
    while current is not None and current.is_composite:
        nxt = None
        for child in current.children:
            if child.name == current.initial:
                nxt = child
                break
        current = nxt
    return current.name if current is not None else None


def assign_ids(component: QumComponent) -> StateEncoding:
    ids: dict[str, int] = {}
    spans: dict[str, tuple[int, int]] = {}
    names_by_id: dict[int, str] = {}
    leaf_ids: list[int] = []
    counter = 0

    def walk(state: State) -> tuple[int, int]:
        nonlocal counter
        my_id = counter
        counter += 1
        ids[state.name] = my_id
        names_by_id[my_id] = state.name
        hi = my_id
        if state.is_composite:
            for child in state.children:
                _, child_hi = walk(child)
                hi = max(hi, child_hi)
        else:
            leaf_ids.append(my_id)
        spans[state.name] = (my_id, hi)
        return my_id, hi

    synthetic = component.normal is None
    if synthetic:
        # Unnamed idle placeholder so failure ids start at 1.
        counter = 1
        leaf_ids.append(0)
        normstate_count = 0
    else:
        for state in component.normal.states:
            walk(state)
        normstate_count = counter

    for machine in component.failures:
        for state in machine.states:
            walk(state)

    if synthetic:
        init_id = 0
    else:
        init_leaf = _resolve_initial_leaf(component.normal.states, component.normal.initial)
        init_id = ids[init_leaf] if init_leaf is not None else 0

    return StateEncoding(
        component=component.name,
        ids=ids,
        spans=spans,
        normstate_count=normstate_count,
        total_count=counter,
        init_id=init_id,
        synthetic_idle=synthetic,
        leaf_ids=tuple(leaf_ids),
        names_by_id=names_by_id,
    )


# ---------------------------------------------------------------------------
# Module naming and state formulas


def _sanitize(name: str) -> str:
    chars = [(c if c.isalnum() else "_") for c in name.lower()]
    ident = "".join(chars)
    if not ident or not ident[0].isalpha():
        ident = "c" + ident
    return ident


def module_id_map(model: QumModel) -> dict[str, str]:
    """Component name -> PRISM module identifier, collision-suffixed."""
    taken: dict[str, int] = {}
    out: dict[str, str] = {}
    for comp in model.components:
        base = _sanitize(comp.name)
        if base not in taken:
            taken[base] = 1
            out[comp.name] = base
        else:
            taken[base] += 1
            out[comp.name] = f"{base}_{taken[base]}"
    return out


@dataclass
class ModelEncoding:
    """Per-component numbering plus the state formula vocabulary."""

    model: QumModel
    modules: dict[str, str]
    by_component: dict[str, StateEncoding]

    def var(self, component: str) -> str:
        return f"{self.modules[component]}_state"

    def attr_var(self, component: str, attr: str) -> str:
        safe = "".join(c if c.isalnum() else "_" for c in attr)
        return f"{self.modules[component]}_{safe}"

    def in_state_expr(self, component: str, state: str, compact: bool = False) -> str:
        """State membership formula over the component's state variable.

        Leaves compare for equality; composite states cover their whole
        pre-order id range. `compact` drops the spaces around `=` (the form
        generated code uses); ranges are always spaced.
        """
        enc = self.by_component[component]
        var = self.var(component)
        lo, hi = enc.span_of(state)
        if lo == hi:
            return f"({var}={lo})" if compact else f"({var} = {lo})"
        return f"({lo} <= {var} & {var} <= {hi})"

    def failure_expr(self, component: str) -> str:
        enc = self.by_component[component]
        var = self.var(component)
        if enc.normstate_count == 0:
            return f"({var} >= 1)"
        return f"({var} > {enc.normstate_count - 1})"

    def any_failure_expr(self) -> str:
        terms = [self.failure_expr(c.name) for c in self.model.components]
        return "|".join(terms)

    def config_terms(self, config: StateConfiguration) -> list[str]:
        return [
            self.in_state_expr(comp, state, compact=True)
            for comp, state in config.members
        ]

    def config_expr(self, config: StateConfiguration) -> str:
        joiner = "&" if config.operator == "and" else "|"
        return "(" + joiner.join(self.config_terms(config)) + ")"


def encode(model: QumModel) -> ModelEncoding:
    return ModelEncoding(
        model=model,
        modules=module_id_map(model),
        by_component={c.name: assign_ids(c) for c in model.components},
    )
