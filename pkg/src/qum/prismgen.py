"""Render composed models as PRISM-language CTMC source text.

One module per component. The module variable `<id>_state` ranges over the
merged integer numbering; attributes become extra integer variables that are
declared (and usable in guards) but never assigned. Operation calls and
triggers share an action label, with the caller carrying the real rate and
the triggered side a neutral rate of 1, so the synchronized product rate is
the caller's.

Output is deterministic: same model in, byte-identical text out.
"""

from __future__ import annotations

from .compose import ComposedMachine, FlatTransition, GlobalModel, build_global
from .model import ModelEncoding, QumModel


def format_rate(value: float) -> str:
    return repr(float(value))


def command_text(module_id: str, flat: FlatTransition) -> str:
    action = flat.action if flat.role in ("call", "trigger") else ""
    guard = f"{module_id}_state={flat.source}"
    if flat.guard is not None:
        guard += " & " + flat.guard.render(f"{module_id}_")
    rate = "1" if flat.role == "trigger" else format_rate(flat.rate)
    return f"  [{action}] {guard} -> {rate} : ({module_id}_state'={flat.target});"


def emit_module(enc: ModelEncoding, cm: ComposedMachine) -> str:
    module_id = enc.modules[cm.component]
    lines = [f"module {module_id}"]
    lines.append(
        f"  {module_id}_state : [0..{cm.encoding.total_count - 1}] init {cm.initial};"
    )
    for decl in cm.attributes:
        var = enc.attr_var(cm.component, decl.name)
        lines.append(f"  {var} : [{decl.lo}..{decl.hi}] init {decl.init};")
    if cm.transitions:
        lines.append("")
        for flat in cm.transitions:
            lines.append(command_text(module_id, flat))
    lines.append("endmodule")
    return "\n".join(lines)


def emit_labels(enc: ModelEncoding) -> str:
    lines = []
    for config in enc.model.state_configs:
        joiner = "&" if config.operator == "and" else "|"
        body = joiner.join(enc.config_terms(config))
        lines.append(f'label "{config.name}" = {body};')
    return "\n".join(lines)


def emit_model(gm: GlobalModel) -> str:
    parts = ["ctmc", "", "const double T;"]
    for cm in gm.machines:
        parts.append("")
        parts.append(emit_module(gm.encoding, cm))
    labels = emit_labels(gm.encoding)
    if labels:
        parts.append("")
        parts.append(labels)
    return "\n".join(parts) + "\n"


def translate(model: QumModel) -> str:
    """Validated model in, PRISM source out."""
    return emit_model(build_global(model))
