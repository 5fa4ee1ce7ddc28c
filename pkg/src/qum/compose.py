"""Composition: merge machines per component, bind operations across them.

Each component's normal machine and failure patterns become one flat
transition system over the integer state ids. Failure entries are replicated
from every normal leaf into the pattern's initial state; the race between
normal progress and failure entry is left to the stochastic semantics.
Operations synchronize one calling component with one triggered component
under a shared action label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .model import (
    FailureEntry,
    Guard,
    ModelEncoding,
    QumComponent,
    QumModel,
    State,
    StateConfiguration,
    StateEncoding,
    StateMachine,
    Transition,
    TransitionKind,
    encode,
    iter_states,
)

# Rate used for plain transitions and operation calls that carry no rate of
# their own; effectively immediate next to ordinary failure and command rates.
DEFAULT_FAST_RATE = 1e9


class UnboundOperation(Exception):
    """An operation has no enabled call or trigger transition to bind."""


class UnknownEvent(KeyError):
    """Replay met an event label the model never declares."""


@dataclass(frozen=True)
class FlatTransition:
    source: int
    target: int
    rate: float
    label: str
    kind: TransitionKind
    role: str = "local"  # "local" | "call" | "trigger"
    action: Optional[str] = None  # operation name for call/trigger
    guard: Optional[Guard] = None
    enabled: bool = True  # guard evaluated against the static attributes


@dataclass(frozen=True)
class FlatState:
    id: int
    name: str
    is_failure: bool


@dataclass
class ComposedMachine:
    component: str
    encoding: StateEncoding
    states: tuple[FlatState, ...]
    transitions: tuple[FlatTransition, ...]
    initial: int
    attributes: tuple = ()


def _depths(states: tuple[State, ...]) -> dict[str, int]:
    out: dict[str, int] = {}

    def walk(state: State, depth: int) -> None:
        out[state.name] = depth
        for child in state.children:
            walk(child, depth + 1)

    for state in states:
        walk(state, 0)
    return out


def _leaves_under(states: tuple[State, ...], name: str) -> list[str]:
    for state in iter_states(states):
        if state.name == name:
            if not state.is_composite:
                return [name]
            return [s.name for s in iter_states(state.children) if not s.is_composite]
    return []


def _descend_to_leaf(component: QumComponent, name: str) -> str:
    """Resolve a (possibly composite) target state to its initial leaf."""
    for machine in ([component.normal] if component.normal else []) + list(component.failures):
        for state in iter_states(machine.states):
            if state.name == name:
                current = state
                while current.is_composite:
                    nxt = None
                    for child in current.children:
                        if child.name == current.initial:
                            nxt = child
                            break
                    if nxt is None:
                        raise KeyError(f"composite {current.name!r} has no initial child")
                    current = nxt
                return current.name
    raise KeyError(f"{component.name} has no state {name!r}")


def _resolve_rate(
    component: QumComponent, trans: Transition, fast_rate: float
) -> float:
    if trans.kind is TransitionKind.TRIGGER:
        # Triggered side of a synchronization; the caller carries the rate.
        return 1.0
    if trans.rate is not None:
        return trans.rate
    if trans.rate_name is not None:
        value = component.rate_value(trans.rate_name)
        if value is None:
            raise KeyError(f"{component.name} has no rate {trans.rate_name!r}")
        return value
    return fast_rate


def _guard_enabled(component: QumComponent, guard: Optional[Guard]) -> bool:
    # Attributes have no update mechanism, so a guard's truth is fixed by the
    # declared attribute initials for the whole run.
    if guard is None:
        return True
    decl = component.attribute(guard.attr)
    if decl is None:
        raise KeyError(f"{component.name} has no attribute {guard.attr!r}")
    return guard.holds(decl.init)


def _entry_rate(component: QumComponent, entry: FailureEntry) -> float:
    if entry.rate is not None:
        return entry.rate
    value = component.rate_value(entry.rate_name) if entry.rate_name else None
    if value is None:
        raise KeyError(f"{component.name} has no rate for entry {entry.name!r}")
    return value


def _machine_initial_leaf(component: QumComponent, machine: StateMachine) -> str:
    if machine.initial is None:
        raise KeyError(f"machine {machine.name!r} has no initial state")
    return _descend_to_leaf(component, machine.initial)


def _flatten_machine(
    component: QumComponent,
    machine: StateMachine,
    enc: StateEncoding,
    fast_rate: float,
) -> list[FlatTransition]:
    """Expand declared transitions to leaf-to-leaf ones with shadowing.

    A transition on a composite state applies to every leaf below it unless a
    deeper transition for the same event label covers that leaf; the innermost
    declaration wins.
    """
    depths = _depths(machine.states)
    candidates: list[tuple[int, int, FlatTransition]] = []  # (decl idx, depth, flat)
    for idx, trans in enumerate(machine.transitions):
        depth = depths[trans.source]
        target_leaf = _descend_to_leaf(component, trans.target)
        rate = _resolve_rate(component, trans, fast_rate)
        role = (
            "call"
            if trans.kind is TransitionKind.CALL
            else "trigger"
            if trans.kind is TransitionKind.TRIGGER
            else "local"
        )
        for leaf in _leaves_under(machine.states, trans.source):
            flat = FlatTransition(
                source=enc.id_of(leaf),
                target=enc.id_of(target_leaf),
                rate=rate,
                label=trans.label,
                kind=trans.kind,
                role=role,
                action=trans.operation,
                guard=trans.guard,
                enabled=_guard_enabled(component, trans.guard),
            )
            candidates.append((idx, depth, flat))

    # Shadowing: per (source leaf, label) keep only the deepest declarations.
    deepest: dict[tuple[int, str], int] = {}
    for _, depth, flat in candidates:
        key = (flat.source, flat.label)
        deepest[key] = max(deepest.get(key, depth), depth)
    out = [
        flat
        for _, depth, flat in candidates
        if depth == deepest[(flat.source, flat.label)]
    ]
    return out


def compose(
    component: QumComponent,
    enc: Optional[StateEncoding] = None,
    fast_rate: float = DEFAULT_FAST_RATE,
) -> ComposedMachine:
    from .model import assign_ids

    if enc is None:
        enc = assign_ids(component)

    flats: list[FlatTransition] = []
    if component.normal is not None:
        flats.extend(_flatten_machine(component, component.normal, enc, fast_rate))

    if enc.synthetic_idle:
        normal_leaves = [0]
    else:
        normal_leaves = [lid for lid in enc.leaf_ids if lid < enc.normstate_count]

    for machine in component.failures:
        entry = machine.entry
        if entry is not None and machine.states:
            entry_leaf = _machine_initial_leaf(component, machine)
            rate = _entry_rate(component, entry)
            enabled = _guard_enabled(component, entry.guard)
            for leaf in normal_leaves:
                flats.append(
                    FlatTransition(
                        source=leaf,
                        target=enc.id_of(entry_leaf),
                        rate=rate,
                        label=entry.name,
                        kind=TransitionKind.FAILURE,
                        guard=entry.guard,
                        enabled=enabled,
                    )
                )
        flats.extend(_flatten_machine(component, machine, enc, fast_rate))

    states = tuple(
        FlatState(
            id=lid,
            name=enc.names_by_id.get(lid, ""),
            is_failure=(lid >= enc.normstate_count if not enc.synthetic_idle else lid >= 1),
        )
        for lid in enc.leaf_ids
    )
    return ComposedMachine(
        component=component.name,
        encoding=enc,
        states=states,
        transitions=tuple(flats),
        initial=enc.init_id,
        attributes=component.attributes,
    )


@dataclass(frozen=True)
class Move:
    component: int
    source: int
    target: int
    role: str


@dataclass(frozen=True)
class Step:
    label: str
    operation: Optional[str]
    moves: tuple[Move, ...]


@dataclass
class Replay:
    final: Optional[tuple[int, ...]]
    stuck_at: Optional[int]
    steps: tuple[Step, ...]

    @property
    def ok(self) -> bool:
        return self.stuck_at is None


@dataclass
class GlobalModel:
    model: QumModel
    encoding: ModelEncoding
    machines: tuple[ComposedMachine, ...]
    sync_actions: tuple[str, ...]
    comp_index: dict[str, int] = field(default_factory=dict)
    state_pos: tuple[int, ...] = ()
    var_names: tuple[str, ...] = ()
    initial_state: tuple[int, ...] = ()
    vocabulary: frozenset = frozenset()
    entry_labels: frozenset = frozenset()
    # Engine/replay indices, built once:
    local_by_src: list[dict[int, list[FlatTransition]]] = field(default_factory=list)
    calls_by_src: dict[str, dict[int, list[FlatTransition]]] = field(default_factory=dict)
    triggers_by_src: dict[str, dict[int, list[FlatTransition]]] = field(default_factory=dict)
    op_parties: dict[str, tuple[int, int]] = field(default_factory=dict)

    def component_state_name(self, comp_idx: int, state_id: int) -> str:
        return self.machines[comp_idx].encoding.names_by_id.get(state_id, "idle")

    def full_state(self, leaf_ids: Iterable[int]) -> tuple[int, ...]:
        out: list[int] = []
        for idx, leaf in enumerate(leaf_ids):
            out.append(leaf)
            out.extend(d.init for d in self.machines[idx].attributes)
        return tuple(out)

    def leaf_ids(self, state: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(state[p] for p in self.state_pos)

    def event_kind(self, label: str) -> str:
        if label in self.op_parties:
            return "operation-call"
        if label in self.entry_labels:
            return "failure"
        return "local"


def build_global(model: QumModel, fast_rate: float = DEFAULT_FAST_RATE) -> GlobalModel:
    enc = encode(model)
    machines = tuple(
        compose(comp, enc.by_component[comp.name], fast_rate) for comp in model.components
    )
    comp_index = {comp.name: i for i, comp in enumerate(model.components)}

    gm = GlobalModel(
        model=model,
        encoding=enc,
        machines=machines,
        sync_actions=tuple(op.name for op in model.operations),
        comp_index=comp_index,
    )

    # Tuple layout: per component, the state id followed by its attributes.
    pos = 0
    state_pos: list[int] = []
    var_names: list[str] = []
    for comp in model.components:
        state_pos.append(pos)
        var_names.append(f"{enc.modules[comp.name]}_state")
        pos += 1
        for decl in comp.attributes:
            var_names.append(enc.attr_var(comp.name, decl.name))
            pos += 1
    gm.state_pos = tuple(state_pos)
    gm.var_names = tuple(var_names)
    gm.initial_state = gm.full_state(m.initial for m in machines)

    vocab: set[str] = set()
    entry_labels: set[str] = set()
    for idx, machine in enumerate(machines):
        by_src: dict[int, list[FlatTransition]] = {}
        for flat in machine.transitions:
            vocab.add(flat.label)
            if flat.kind is TransitionKind.FAILURE:
                entry_labels.add(flat.label)
            if not flat.enabled:
                continue
            if flat.role == "local":
                by_src.setdefault(flat.source, []).append(flat)
            elif flat.role == "call":
                gm.calls_by_src.setdefault(flat.action, {}).setdefault(flat.source, []).append(flat)
            else:
                gm.triggers_by_src.setdefault(flat.action, {}).setdefault(flat.source, []).append(flat)
        gm.local_by_src.append(by_src)

    for op in model.operations:
        caller_idx = comp_index[op.caller]
        callee_idx = comp_index[op.callee]
        gm.op_parties[op.name] = (caller_idx, callee_idx)
        has_call = any(
            f.action == op.name
            for f in machines[caller_idx].transitions
            if f.role == "call"
        )
        has_trigger = any(
            f.action == op.name
            for f in machines[callee_idx].transitions
            if f.role == "trigger"
        )
        if not has_call or not has_trigger:
            missing = "call" if not has_call else "trigger"
            raise UnboundOperation(
                f"operation {op.name!r} has no {missing} transition to bind"
            )

    gm.vocabulary = frozenset(vocab | set(gm.op_parties))
    gm.entry_labels = frozenset(entry_labels)
    return gm


def replay(gm: GlobalModel, events: Iterable[str]) -> Replay:
    """Run an event sequence from the initial state, deterministically.

    Operation labels synchronize the first enabled call transition of the
    calling component with the first enabled trigger transition of the
    triggered one. Other labels take the first enabled local transition in
    component declaration order. An event with no enabled transition stops
    the replay at that index.
    """
    current = [m.initial for m in gm.machines]
    steps: list[Step] = []
    for index, label in enumerate(events):
        if label not in gm.vocabulary:
            raise UnknownEvent(label)
        step = _apply_event(gm, current, label)
        if step is None:
            return Replay(final=None, stuck_at=index, steps=tuple(steps))
        steps.append(step)
    return Replay(final=gm.full_state(current), stuck_at=None, steps=tuple(steps))


def _apply_event(gm: GlobalModel, current: list[int], label: str) -> Optional[Step]:
    # Operation names take precedence over identically named local labels.
    if label in gm.op_parties:
        caller_idx, callee_idx = gm.op_parties[label]
        calls = gm.calls_by_src.get(label, {}).get(current[caller_idx], [])
        triggers = gm.triggers_by_src.get(label, {}).get(current[callee_idx], [])
        if not calls or not triggers:
            return None
        call, trig = calls[0], triggers[0]
        moves = (
            Move(caller_idx, call.source, call.target, "call"),
            Move(callee_idx, trig.source, trig.target, "trigger"),
        )
        current[caller_idx] = call.target
        current[callee_idx] = trig.target
        return Step(label=label, operation=label, moves=moves)

    for idx in range(len(gm.machines)):
        for flat in gm.local_by_src[idx].get(current[idx], []):
            if flat.label == label:
                move = Move(idx, flat.source, flat.target, "local")
                current[idx] = flat.target
                return Step(label=label, operation=None, moves=(move,))
    return None


def config_predicate(
    gm: GlobalModel, config: StateConfiguration
) -> Callable[[tuple[int, ...]], bool]:
    """Membership test for a state configuration over full state tuples."""
    spans: list[tuple[int, int, int]] = []
    for comp_name, state_name in config.members:
        idx = gm.comp_index[comp_name]
        lo, hi = gm.machines[idx].encoding.span_of(state_name)
        spans.append((gm.state_pos[idx], lo, hi))
    if config.operator == "and":
        return lambda s: all(lo <= s[p] <= hi for p, lo, hi in spans)
    return lambda s: any(lo <= s[p] <= hi for p, lo, hi in spans)


def failure_predicate(gm: GlobalModel, component: str) -> Callable[[tuple[int, ...]], bool]:
    idx = gm.comp_index[component]
    enc = gm.machines[idx].encoding
    floor = 1 if enc.synthetic_idle else enc.normstate_count
    pos = gm.state_pos[idx]
    return lambda s: s[pos] >= floor


def any_failure_predicate(gm: GlobalModel) -> Callable[[tuple[int, ...]], bool]:
    preds = [failure_predicate(gm, c.name) for c in gm.model.components]
    return lambda s: any(p(s) for p in preds)
