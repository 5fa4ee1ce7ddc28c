"""Generate time-bounded reachability properties for a model.

For every component: the probability of reaching any of its failure states
within T. For the system: the disjunction over all components. For every
state configuration: a property over its label plus the expanded state
formula, and the bare state formula itself for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import ModelEncoding, QumModel, StateConfiguration, encode


@dataclass(frozen=True)
class CslProperty:
    name: str
    category: str  # ComponentFailure | AnyComponentFailure | StateConfiguration | RawStateFormula
    source: str
    text: str
    expanded: Optional[str] = None


def _until(phi: str) -> str:
    return f"P=? [ (true) U<=T {phi} ]"


def component_failure(enc: ModelEncoding, component: str) -> CslProperty:
    return CslProperty(
        name=f"failure_{component}",
        category="ComponentFailure",
        source=component,
        text=_until(enc.failure_expr(component)),
    )


def any_component_failure(enc: ModelEncoding) -> CslProperty:
    components = enc.model.components
    phi = enc.any_failure_expr()
    if len(components) > 1:
        phi = f"({phi})"
    return CslProperty(
        name="any_component_failure",
        category="AnyComponentFailure",
        source=enc.model.name,
        text=_until(phi),
    )


def state_config_property(
    enc: ModelEncoding, config: StateConfiguration, label_based: bool = True
) -> CslProperty:
    expanded = enc.config_expr(config)
    phi = f"({config.name})" if label_based else expanded
    return CslProperty(
        name=config.name,
        category="StateConfiguration",
        source=config.name,
        text=_until(phi),
        expanded=expanded,
    )


def raw_state_formula(enc: ModelEncoding, config: StateConfiguration) -> CslProperty:
    return CslProperty(
        name=f"{config.name}_formula",
        category="RawStateFormula",
        source=config.name,
        text=enc.config_expr(config),
    )


def generate(model: QumModel, enc: Optional[ModelEncoding] = None) -> list[CslProperty]:
    if enc is None:
        enc = encode(model)
    props = [component_failure(enc, comp.name) for comp in model.components]
    props.append(any_component_failure(enc))
    for config in model.state_configs:
        props.append(state_config_property(enc, config))
    for config in model.state_configs:
        props.append(raw_state_formula(enc, config))
    return props


def emit_csl(props: list[CslProperty]) -> str:
    blocks = [f"// {p.category}: {p.source}\n{p.text}" for p in props]
    return "\n\n".join(blocks) + "\n"
