"""Causal event filtering and fault tree construction over evidence paths.

Causality is approximated by a counterfactual replay test: an event is causal
for the hazard when removing it from the path (and replaying the remainder)
no longer reaches the hazard. Removal is iterated left-to-right until no
further event can be dropped, after a cheap prepass that strips steps which
did not change the global state. Failure-pattern entry events are never
dropped. Paths with the same kept-event multiset form one causal class; the
gate of a class comes from replaying adjacent transpositions of its
representative sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .compose import GlobalModel, replay
from .engine import Counterexample

Predicate = Callable[[tuple[int, ...]], bool]


@dataclass(frozen=True)
class CausalClass:
    events: tuple[str, ...]  # kept-event multiset, sorted
    sequence: tuple[str, ...]  # representative kept order
    kinds: tuple[str, ...]  # aligned with sequence
    gate: str  # "and" | "pand" | "seq"
    order_pairs: tuple[tuple[str, str], ...]
    free_pairs: tuple[tuple[str, str], ...]
    probability: float
    member_count: int


@dataclass(frozen=True)
class FaultTree:
    top: str
    total_mass: float
    path_count: int
    classes: tuple[CausalClass, ...]


def _reaches(gm: GlobalModel, events: Sequence[str], phi: Predicate) -> bool:
    result = replay(gm, events)
    return result.ok and bool(phi(result.final))


def filter_events(
    gm: GlobalModel,
    events: Sequence[str],
    phi: Predicate,
    memo: Optional[dict] = None,
) -> tuple[str, ...]:
    """Causal core of one path: drop every event the hazard does not need."""
    result = replay(gm, events)
    if not result.ok or not phi(result.final):
        raise ValueError("path does not reach the hazard")
    # steps that left the global state unchanged cannot be causal
    core = tuple(
        ev
        for ev, step in zip(events, result.steps)
        if any(m.source != m.target for m in step.moves)
    )
    if memo is not None and core in memo:
        return memo[core]
    stripped = core
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(core):
            if core[i] in gm.entry_labels:
                i += 1
                continue
            cand = core[:i] + core[i + 1 :]
            if _reaches(gm, cand, phi):
                core = cand
                changed = True
            else:
                i += 1
    if memo is not None:
        memo[stripped] = core
    return core


def causal_filter(
    cx: Counterexample, gm: GlobalModel, phi: Predicate
) -> list[tuple[tuple[str, ...], float]]:
    """Kept-event sequence and bound for every collected path."""
    memo: dict = {}
    return [(filter_events(gm, p.labels, phi, memo), p.bound) for p in cx.paths]


def order_analysis(
    gm: GlobalModel, sequence: Sequence[str], phi: Predicate
) -> tuple[str, tuple[tuple[str, str], ...], tuple[tuple[str, str], ...]]:
    """Gate choice by replaying adjacent transpositions of the sequence."""
    sequence = tuple(sequence)
    if len(sequence) < 2:
        return "and", (), ()
    ordered: list[tuple[str, str]] = []
    free: list[tuple[str, str]] = []
    for i in range(len(sequence) - 1):
        pair = (sequence[i], sequence[i + 1])
        swapped = sequence[:i] + (sequence[i + 1], sequence[i]) + sequence[i + 2 :]
        (free if _reaches(gm, swapped, phi) else ordered).append(pair)
    if not ordered:
        gate = "and"
    elif not free:
        gate = "pand"
    else:
        gate = "seq"
    return gate, tuple(dict.fromkeys(ordered)), tuple(dict.fromkeys(free))


def classify(cx: Counterexample, gm: GlobalModel, phi: Predicate) -> tuple[CausalClass, ...]:
    filtered = causal_filter(cx, gm, phi)
    buckets: dict[tuple[str, ...], list[tuple[float, tuple[str, ...]]]] = {}
    for kept, bound in filtered:
        buckets.setdefault(tuple(sorted(kept)), []).append((bound, kept))
    classes = []
    for key, members in buckets.items():
        best_bound = max(b for b, _ in members)
        representative = min(seq for b, seq in members if b == best_bound)
        gate, ordered, free = order_analysis(gm, representative, phi)
        classes.append(
            CausalClass(
                events=key,
                sequence=representative,
                kinds=tuple(gm.event_kind(ev) for ev in representative),
                gate=gate,
                order_pairs=ordered,
                free_pairs=free,
                probability=math.fsum(b for b, _ in members),
                member_count=len(members),
            )
        )
    classes.sort(key=lambda c: (-c.probability, c.events))
    return tuple(classes)


def build_fault_tree(
    cx: Counterexample, gm: GlobalModel, phi: Predicate, top: str
) -> FaultTree:
    classes = classify(cx, gm, phi)
    return FaultTree(
        top=top,
        total_mass=math.fsum(c.probability for c in classes),
        path_count=len(cx.paths),
        classes=classes,
    )


# ---------------------------------------------------------------------------
# Rendering


def _dot_quote(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def emit_dot(tree: FaultTree) -> str:
    lines = [
        "digraph fault_tree {",
        "  rankdir=BT;",
        '  node [fontname="Helvetica"];',
        f'  top [shape=house, label="{_dot_quote(tree.top)}\\nOR  p={tree.total_mass:.6e}"];',
    ]
    for ci, cls in enumerate(tree.classes):
        label = f"{cls.gate.upper()}\\np={cls.probability:.6e}"
        if cls.gate == "seq" and cls.order_pairs:
            label += "\\norder: " + ", ".join(
                f"{_dot_quote(a)}<{_dot_quote(b)}" for a, b in cls.order_pairs
            )
        lines.append(f'  g{ci} [shape=invtrapezium, label="{label}"];')
        lines.append(f"  g{ci} -> top;")
        numbered = cls.gate in ("pand", "seq")
        for ei, (event, kind) in enumerate(zip(cls.sequence, cls.kinds)):
            leaf = f"g{ci}_e{ei}"
            lines.append(
                f'  {leaf} [shape=ellipse, label="{_dot_quote(event)}\\n({kind})"];'
            )
            if numbered:
                lines.append(f'  {leaf} -> g{ci} [label="{ei + 1}"];')
            else:
                lines.append(f"  {leaf} -> g{ci};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_text(tree: FaultTree) -> str:
    lines = [
        tree.top,
        f"OR  p={tree.total_mass:.6e}  classes={len(tree.classes)}  paths={tree.path_count}",
    ]
    for ci, cls in enumerate(tree.classes, start=1):
        lines.append(
            f"{ci}. {cls.gate.upper()}  p={cls.probability:.6e}  members={cls.member_count}"
        )
        numbered = cls.gate in ("pand", "seq")
        for ei, (event, kind) in enumerate(zip(cls.sequence, cls.kinds), start=1):
            bullet = f"{ei}." if numbered else "-"
            lines.append(f"   {bullet} {event}  [{kind}]")
        if cls.gate == "seq":
            if cls.order_pairs:
                lines.append(
                    "   order: " + "; ".join(f"{a} < {b}" for a, b in cls.order_pairs)
                )
            if cls.free_pairs:
                lines.append(
                    "   free: " + "; ".join(f"{a} ~ {b}" for a, b in cls.free_pairs)
                )
    return "\n".join(lines) + "\n"
