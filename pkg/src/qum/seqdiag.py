"""Sequence diagrams for causal classes.

Each class becomes one operand of a top-level alt fragment, named with the
class probability. Local transitions render as transition("src","tgt")
self-calls on the owning component's lifeline; operation calls render as
caller-to-callee messages. Runs of order-free events become par fragments
with one compartment per event. Messages are numbered 1..n per operand in
representative order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .compose import GlobalModel, replay
from .faulttree import CausalClass
from .xmlbase import MODEL_END, XmlSyntax, attr_escape, parse_bytes


@dataclass(frozen=True)
class Message:
    index: int
    source: str
    target: str
    text: str
    event: str


@dataclass(frozen=True)
class ParBlock:
    compartments: tuple[tuple[Message, ...], ...]


Item = Union[Message, ParBlock]


@dataclass(frozen=True)
class Operand:
    name: str
    items: tuple[Item, ...]

    def messages(self) -> tuple[Message, ...]:
        out: list[Message] = []
        for item in self.items:
            if isinstance(item, ParBlock):
                for compartment in item.compartments:
                    out.extend(compartment)
            else:
                out.append(item)
        return tuple(out)


@dataclass(frozen=True)
class SequenceDiagram:
    title: str
    lifelines: tuple[str, ...]
    operands: tuple[Operand, ...]


def _messages_for(gm: GlobalModel, cls: CausalClass) -> list[Message]:
    result = replay(gm, cls.sequence)
    if not result.ok:
        raise ValueError("class sequence does not replay to a final state")
    msgs: list[Message] = []
    for idx, (event, step) in enumerate(zip(cls.sequence, result.steps), start=1):
        if step.operation is not None:
            caller = callee = None
            for move in step.moves:
                if move.role == "call":
                    caller = move.component
                elif move.role == "trigger":
                    callee = move.component
            msgs.append(
                Message(
                    idx,
                    gm.model.components[caller].name,
                    gm.model.components[callee].name,
                    f"{step.operation}()",
                    event,
                )
            )
        else:
            move = step.moves[0]
            owner = gm.model.components[move.component].name
            src = gm.component_state_name(move.component, move.source)
            tgt = gm.component_state_name(move.component, move.target)
            msgs.append(Message(idx, owner, owner, f'transition("{src}","{tgt}")', event))
    return msgs


def build_diagram(
    classes: Sequence[CausalClass], gm: GlobalModel, title: str = ""
) -> SequenceDiagram:
    lifelines = tuple(c.name for c in gm.model.components)
    operands: list[Operand] = []
    for cls in classes:
        msgs = _messages_for(gm, cls)
        free = set(cls.free_pairs)
        items: list[Item] = []

        def flush(run: list[Message]) -> None:
            if len(run) >= 2:
                items.append(ParBlock(tuple((m,) for m in run)))
            else:
                items.extend(run)

        run: list[Message] = [msgs[0]] if msgs else []
        for i in range(1, len(msgs)):
            if (cls.sequence[i - 1], cls.sequence[i]) in free:
                run.append(msgs[i])
            else:
                flush(run)
                run = [msgs[i]]
        flush(run)
        operands.append(Operand(f"p={cls.probability:.6e}", tuple(items)))
    return SequenceDiagram(title, lifelines, tuple(operands))


def emit_plantuml(diagram: SequenceDiagram) -> str:
    lines = ["@startuml"]
    if diagram.title:
        lines.append(f"title {diagram.title}")
    if diagram.operands:
        for name in diagram.lifelines:
            lines.append(f'participant "{name}"')

        def message_line(msg: Message, pad: str) -> str:
            return f'{pad}"{msg.source}" -> "{msg.target}" : {msg.index}. {msg.text}'

        for i, operand in enumerate(diagram.operands):
            lines.append(("alt " if i == 0 else "else ") + operand.name)
            for item in operand.items:
                if isinstance(item, ParBlock):
                    lines.append("  par")
                    for j, compartment in enumerate(item.compartments):
                        if j:
                            lines.append("  and")
                        for msg in compartment:
                            lines.append(message_line(msg, "    "))
                    lines.append("  end")
                else:
                    lines.append(message_line(item, "  "))
        lines.append("end")
    lines.append("@enduml")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# XMI append


def _render_message(msg: Message, prefix: str, oi: int, pad: str) -> str:
    return (
        f'{pad}<message xmi:id="{prefix}op{oi}_m{msg.index}" number="{msg.index}" '
        f'sender="{attr_escape(msg.source)}" receiver="{attr_escape(msg.target)}" '
        f'event="{attr_escape(msg.event)}" name="{attr_escape(msg.text)}"/>\n'
    )


def _render_package(diagram: SequenceDiagram, prefix: str) -> str:
    name = attr_escape(diagram.title) if diagram.title else "counterexample"
    parts = [
        f'  <packagedElement xmi:type="uml:Package" xmi:id="{prefix}pkg" '
        f'name="CounterexampleDiagrams">\n',
        f'    <packagedElement xmi:type="uml:Interaction" xmi:id="{prefix}int" '
        f'name="{name}">\n',
    ]
    for i, lifeline in enumerate(diagram.lifelines):
        parts.append(f'      <lifeline xmi:id="{prefix}l{i}" name="{attr_escape(lifeline)}"/>\n')
    parts.append(
        f'      <fragment xmi:type="uml:CombinedFragment" xmi:id="{prefix}alt" '
        f'interactionOperator="alt">\n'
    )
    for oi, operand in enumerate(diagram.operands):
        parts.append(
            f'        <operand xmi:id="{prefix}op{oi}" name="{attr_escape(operand.name)}">\n'
        )
        par_count = 0
        for item in operand.items:
            if isinstance(item, ParBlock):
                par_id = f"{prefix}op{oi}_par{par_count}"
                par_count += 1
                parts.append(
                    f'          <fragment xmi:type="uml:CombinedFragment" '
                    f'xmi:id="{par_id}" interactionOperator="par">\n'
                )
                for ci, compartment in enumerate(item.compartments):
                    parts.append(f'            <operand xmi:id="{par_id}_c{ci}">\n')
                    for msg in compartment:
                        parts.append(_render_message(msg, prefix, oi, " " * 14))
                    parts.append("            </operand>\n")
                parts.append("          </fragment>\n")
            else:
                parts.append(_render_message(item, prefix, oi, " " * 10))
        parts.append("        </operand>\n")
    parts.append("      </fragment>\n")
    parts.append("    </packagedElement>\n")
    parts.append("  </packagedElement>\n")
    return "".join(parts)


def append_xmi(diagram: SequenceDiagram, original: bytes) -> bytes:
    """Splice the diagram package in front of the model's closing tag.

    Bytes outside the inserted package are preserved exactly; the id prefix
    counts prior insertions so repeated appends stay unique.
    """
    root = parse_bytes(original)
    existing = sum(1 for e in root.iter() if e.get("name") == "CounterexampleDiagrams")
    prefix = f"cex{existing + 1}_"

    match = None
    for match in MODEL_END.finditer(original):
        pass
    if match is None:
        raise XmlSyntax(0, "document has no Model element to append to")

    block = _render_package(diagram, prefix).encode("utf-8")
    out = original[: match.start()] + block + original[match.start() :]
    parse_bytes(out)
    return out
