"""Line-oriented plain-text model format.

Layout (`#` starts a comment, blank lines are ignored):

    model Name
    component Name {
      rates { name = 1e-5 ... }
      attributes { name : [0..5] init 0 ... }
      machine normal MachineName {
        initial StateName
        state StateName [config name and|or ...] [ops a b] [{ nested states }]
        transition Src -> Tgt [plain|stochastic|failure|repair|call Op|trigger Op]
            [rate 3600.0 | rate_name someRate] [guard attr >= 3] [name label]
      }
      machine failure MachineName {
        entry Name [rate 0.01 | rate_name someRate] [guard attr > 3] [ops a b]
        ...
      }
    }
    operations { opName : Caller -> Callee ... }

Blocks open with a `{` ending a line and close with a lone `}`. The parser
returns an unvalidated model; reference and profile checks happen in
model validation.
"""

from __future__ import annotations

import math
import re
from typing import Iterator, Optional

from ..model import (
    AttributeDecl,
    ConfigTag,
    FailureEntry,
    Guard,
    OperationSignature,
    QumComponent,
    QumModel,
    RateEntry,
    State,
    StateMachine,
    Transition,
    TransitionKind,
)


class NativeSyntax(Exception):
    def __init__(self, line: int, expected: str):
        self.line = line
        self.expected = expected
        super().__init__(f"line {line}: expected {expected}")


GUARD_OPS = ("<=", ">=", "!=", "==", "<", ">", "=")
_ATTR_RE = re.compile(r"^(\w+)\s*:\s*\[\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*\]\s*init\s*(-?\d+)$")
_RATE_RE = re.compile(r"^(\w+)\s*=\s*(\S+)$")
_OP_RE = re.compile(r"^(\w+)\s*:\s*(\w+)\s*->\s*(\w+)$")

_KINDS = {
    "plain": TransitionKind.PLAIN,
    "stochastic": TransitionKind.STOCHASTIC,
    "failure": TransitionKind.FAILURE,
    "repair": TransitionKind.REPAIR,
    "call": TransitionKind.CALL,
    "trigger": TransitionKind.TRIGGER,
}


class _Lines:
    """Comment-stripped, non-blank lines with 1-based numbers."""

    def __init__(self, text: str):
        self.items: list[tuple[int, str]] = []
        for no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                self.items.append((no, line))
        self.pos = 0
        self.last_no = self.items[-1][0] if self.items else 1

    def peek(self) -> Optional[tuple[int, str]]:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def take(self, expected: str) -> tuple[int, str]:
        item = self.peek()
        if item is None:
            raise NativeSyntax(self.last_no, expected)
        self.pos += 1
        return item


def _parse_float(token: str, no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise NativeSyntax(no, f"a number, got {token!r}") from None
    if not math.isfinite(value):
        raise NativeSyntax(no, "a finite rate")
    return value


def _parse_int(token: str, no: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise NativeSyntax(no, f"an integer, got {token!r}") from None


class _Cursor:
    """Token cursor over one line."""

    def __init__(self, no: int, tokens: list[str]):
        self.no = no
        self.tokens = tokens
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if not self.done() else None

    def next(self, expected: str) -> str:
        if self.done():
            raise NativeSyntax(self.no, expected)
        token = self.tokens[self.pos]
        self.pos += 1
        return token


def parse_guard(cur: _Cursor) -> Guard:
    attr = cur.next("a guard attribute")
    op = cur.next("a comparison operator")
    if op not in GUARD_OPS:
        raise NativeSyntax(cur.no, f"a comparison operator, got {op!r}")
    if op == "==":
        op = "="
    value = _parse_int(cur.next("a guard constant"), cur.no)
    return Guard(attr, op, value)


def guard_from_text(text: str, line: int = 0) -> Guard:
    """Parse "attr op value"; shared with the XMI front end."""
    return parse_guard(_Cursor(line, text.split()))


def _parse_transition(no: int, line: str) -> Transition:
    cur = _Cursor(no, line.split())
    head = cur.next("'transition'")
    if head != "transition":
        raise NativeSyntax(no, "'transition'")
    source = cur.next("a source state")
    if cur.next("'->'") != "->":
        raise NativeSyntax(no, "'->'")
    target = cur.next("a target state")
    kind = TransitionKind.PLAIN
    operation = None
    if cur.peek() in _KINDS:
        word = cur.next("a transition kind")
        kind = _KINDS[word]
        if word in ("call", "trigger"):
            operation = cur.next("an operation name")
    rate = None
    rate_name = None
    guard = None
    name = None
    while not cur.done():
        clause = cur.next("a clause")
        if clause == "rate":
            rate = _parse_float(cur.next("a rate value"), no)
        elif clause == "rate_name":
            rate_name = cur.next("a rate name")
        elif clause == "guard":
            guard = parse_guard(cur)
        elif clause == "name":
            name = cur.next("a transition label")
        else:
            raise NativeSyntax(no, f"'rate', 'rate_name', 'guard' or 'name', got {clause!r}")
    return Transition(source, target, kind, rate=rate, rate_name=rate_name,
                      operation=operation, guard=guard, name=name)


def _parse_entry(no: int, line: str) -> FailureEntry:
    cur = _Cursor(no, line.split())
    cur.next("'entry'")
    name = cur.next("an entry name")
    rate = None
    rate_name = None
    guard = None
    ops: list[str] = []
    while not cur.done():
        clause = cur.next("a clause")
        if clause == "rate":
            rate = _parse_float(cur.next("a rate value"), no)
        elif clause == "rate_name":
            rate_name = cur.next("a rate name")
        elif clause == "guard":
            guard = parse_guard(cur)
        elif clause == "ops":
            while not cur.done():
                ops.append(cur.next("an operation name"))
        else:
            raise NativeSyntax(no, f"'rate', 'rate_name', 'guard' or 'ops', got {clause!r}")
    return FailureEntry(name=name, rate=rate, rate_name=rate_name, guard=guard, ops=tuple(ops))


def _parse_state_header(
    no: int, line: str
) -> tuple[str, tuple[ConfigTag, ...], tuple[str, ...], bool]:
    """Returns (name, tags, entry ops, opens_block)."""
    opens = line.endswith("{")
    if opens:
        line = line[:-1].strip()
    cur = _Cursor(no, line.split())
    cur.next("'state'")
    name = cur.next("a state name")
    tags: list[ConfigTag] = []
    entry_ops: list[str] = []
    while not cur.done():
        clause = cur.next("'config' or 'ops'")
        if clause == "config":
            config = cur.next("a configuration name")
            operator = cur.next("'and' or 'or'")
            if operator not in ("and", "or"):
                raise NativeSyntax(no, f"'and' or 'or', got {operator!r}")
            tags.append(ConfigTag(config, operator))
        elif clause == "ops":
            while not cur.done():
                entry_ops.append(cur.next("an operation name"))
        else:
            raise NativeSyntax(no, f"'config' or 'ops', got {clause!r}")
    return name, tuple(tags), tuple(entry_ops), opens


def _parse_state_block(lines: _Lines) -> tuple[tuple[State, ...], Optional[str]]:
    """States and the `initial` name inside a `{ ... }` block."""
    states: list[State] = []
    initial = None
    while True:
        no, line = lines.take("'state', 'initial' or '}'")
        if line == "}":
            return tuple(states), initial
        if line.startswith("initial"):
            cur = _Cursor(no, line.split())
            cur.next("'initial'")
            initial = cur.next("a state name")
        elif line.startswith("state"):
            states.append(_parse_state(no, line, lines))
        else:
            raise NativeSyntax(no, f"'state', 'initial' or '}}', got {line.split()[0]!r}")


def _parse_state(no: int, line: str, lines: _Lines) -> State:
    name, tags, entry_ops, opens = _parse_state_header(no, line)
    children: tuple[State, ...] = ()
    initial = None
    if opens:
        children, initial = _parse_state_block(lines)
    return State(name, children=children, initial=initial, entry_ops=entry_ops, tags=tags)


def _parse_machine(no: int, header: str, lines: _Lines) -> tuple[str, StateMachine]:
    tokens = header.split()
    if len(tokens) != 4 or tokens[0] != "machine" or tokens[3] != "{":
        raise NativeSyntax(no, "'machine normal|failure Name {'")
    role = tokens[1]
    if role not in ("normal", "failure"):
        raise NativeSyntax(no, f"'normal' or 'failure', got {role!r}")
    name = tokens[2]
    states: list[State] = []
    transitions: list[Transition] = []
    initial = None
    entry = None
    while True:
        lno, line = lines.take("a machine item or '}'")
        if line == "}":
            break
        word = line.split()[0]
        if word == "initial":
            cur = _Cursor(lno, line.split())
            cur.next("'initial'")
            initial = cur.next("a state name")
        elif word == "state":
            states.append(_parse_state(lno, line, lines))
        elif word == "transition":
            transitions.append(_parse_transition(lno, line))
        elif word == "entry":
            if role != "failure":
                raise NativeSyntax(lno, "'entry' only inside failure machines")
            entry = _parse_entry(lno, line)
        else:
            raise NativeSyntax(lno, f"a machine item, got {word!r}")
    machine = StateMachine(
        name=name,
        states=tuple(states),
        initial=initial,
        transitions=tuple(transitions),
        entry=entry,
    )
    return role, machine


def _parse_simple_block(lines: _Lines, item_re: re.Pattern, expected: str) -> Iterator[tuple[int, re.Match]]:
    while True:
        no, line = lines.take(f"{expected} or '}}'")
        if line == "}":
            return
        match = item_re.match(line)
        if match is None:
            raise NativeSyntax(no, expected)
        yield no, match


def _parse_component(no: int, header: str, lines: _Lines) -> QumComponent:
    tokens = header.split()
    if len(tokens) != 3 or tokens[2] != "{":
        raise NativeSyntax(no, "'component Name {'")
    name = tokens[1]
    rates: list[RateEntry] = []
    attributes: list[AttributeDecl] = []
    normal: Optional[StateMachine] = None
    failures: list[StateMachine] = []
    while True:
        lno, line = lines.take("a component item or '}'")
        if line == "}":
            break
        word = line.split()[0]
        if line.replace(" ", "") == "rates{":
            for rno, m in _parse_simple_block(lines, _RATE_RE, "'name = value'"):
                rates.append(RateEntry(m.group(1), _parse_float(m.group(2), rno)))
        elif line.replace(" ", "") == "attributes{":
            for ano, m in _parse_simple_block(lines, _ATTR_RE, "'name : [lo..hi] init v'"):
                attributes.append(
                    AttributeDecl(
                        m.group(1),
                        _parse_int(m.group(2), ano),
                        _parse_int(m.group(3), ano),
                        _parse_int(m.group(4), ano),
                    )
                )
        elif word == "machine":
            role, machine = _parse_machine(lno, line, lines)
            if role == "normal":
                if normal is not None:
                    raise NativeSyntax(lno, "at most one normal machine per component")
                normal = machine
            else:
                failures.append(machine)
        else:
            raise NativeSyntax(lno, f"'rates', 'attributes' or 'machine', got {word!r}")
    return QumComponent(
        name=name,
        normal=normal,
        failures=tuple(failures),
        rates=tuple(rates),
        attributes=tuple(attributes),
    )


def parse_native(text: str) -> QumModel:
    lines = _Lines(text)
    no, header = lines.take("'model Name'")
    tokens = header.split()
    if len(tokens) != 2 or tokens[0] != "model":
        raise NativeSyntax(no, "'model Name'")
    model_name = tokens[1]
    components: list[QumComponent] = []
    operations: list[OperationSignature] = []
    while True:
        item = lines.peek()
        if item is None:
            break
        no, line = lines.take("'component' or 'operations'")
        word = line.split()[0]
        if word == "component":
            components.append(_parse_component(no, line, lines))
        elif line.replace(" ", "") == "operations{":
            for _, m in _parse_simple_block(lines, _OP_RE, "'op : Caller -> Callee'"):
                operations.append(OperationSignature(m.group(1), m.group(2), m.group(3)))
        else:
            raise NativeSyntax(no, f"'component' or 'operations', got {word!r}")
    return QumModel(name=model_name, components=tuple(components), operations=tuple(operations))
