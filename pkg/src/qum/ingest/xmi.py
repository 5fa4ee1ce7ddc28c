"""XMI 2.1 subset reader.

Accepted shape: an `xmi:XMI` document (version 2.1) holding one `uml:Model`
with a profileApplication that references the QuantUM profile, plus
stereotype-application elements (any element whose tag starts with `QUM`)
referencing model elements by id:

  - QUMComponent base_Class=...      with <rate name= value=/> and
                                     <attribute name= lo= hi= init=/> children
  - QUMNormalMachine base_StateMachine=...
  - QUMFailureMachine base_StateMachine=... entryName= [entryRate= |
        entryRateName=] [entryGuard="attr op value"] [entryOps="a b"]
  - QUMStochasticTransition / QUMFailureTransition / QUMRepairTransition /
        QUMCallTransition / QUMTriggerTransition base_Transition=...
        [rate= | rateName=] [operation=] [guard=]
  - QUMStateConfiguration base_State=... name= operator=and|or
  - QUMOperation name= caller= callee=

State machines are `ownedBehavior` elements (xmi:type uml:StateMachine) of a
class, regions carry an `initial` attribute naming their initial state, a
`subvertex` may carry `entryOps="a b"` (operations invoked on entry), and
transitions reference states by xmi:id. Unknown elements and stereotypes whose
base reference does not resolve are ignored.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Optional

from ..model import (
    AttributeDecl,
    ConfigTag,
    FailureEntry,
    OperationSignature,
    QumComponent,
    QumModel,
    RateEntry,
    State,
    StateMachine,
    Transition,
    TransitionKind,
)
from ..xmlbase import XmlSyntax, parse_bytes
from .native import NativeSyntax, guard_from_text


class UnsupportedXmiVersion(Exception):
    pass


class MissingProfileApplication(Exception):
    pass


_TRANSITION_STEREOS = {
    "QUMStochasticTransition": TransitionKind.STOCHASTIC,
    "QUMFailureTransition": TransitionKind.FAILURE,
    "QUMRepairTransition": TransitionKind.REPAIR,
    "QUMCallTransition": TransitionKind.CALL,
    "QUMTriggerTransition": TransitionKind.TRIGGER,
}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _xattr(el: ET.Element, name: str) -> Optional[str]:
    # attributes may arrive namespaced (xmi:id, xmi:type) or bare
    for key, value in el.attrib.items():
        if key.rsplit("}", 1)[-1] == name:
            return value
    return None


def _float_attr(el: ET.Element, name: str) -> Optional[float]:
    text = _xattr(el, name)
    if text is None:
        return None
    try:
        return float(text)
    except ValueError:
        raise XmlSyntax(0, f"bad numeric value {text!r} in {name}") from None


def _guard_attr(el: ET.Element, name: str):
    text = _xattr(el, name)
    if text is None:
        return None
    try:
        return guard_from_text(text)
    except NativeSyntax:
        raise XmlSyntax(0, f"malformed guard expression {text!r}") from None


class _Stereotypes:
    """Index of every QUM* stereotype application in the document."""

    def __init__(self, root: ET.Element):
        self.components: dict[str, ET.Element] = {}
        self.normal_machines: set[str] = set()
        self.failure_machines: dict[str, ET.Element] = {}
        self.transitions: dict[str, tuple[TransitionKind, ET.Element]] = {}
        self.state_tags: dict[str, list[ConfigTag]] = {}
        self.operations: list[OperationSignature] = []
        for el in root.iter():
            local = _local(el.tag)
            if not local.startswith("QUM"):
                continue
            if local == "QUMComponent":
                base = _xattr(el, "base_Class")
                if base:
                    self.components[base] = el
            elif local == "QUMNormalMachine":
                base = _xattr(el, "base_StateMachine")
                if base:
                    self.normal_machines.add(base)
            elif local == "QUMFailureMachine":
                base = _xattr(el, "base_StateMachine")
                if base:
                    self.failure_machines[base] = el
            elif local in _TRANSITION_STEREOS:
                base = _xattr(el, "base_Transition")
                if base:
                    self.transitions[base] = (_TRANSITION_STEREOS[local], el)
            elif local == "QUMStateConfiguration":
                base = _xattr(el, "base_State")
                name = _xattr(el, "name")
                operator = _xattr(el, "operator")
                if base and name and operator in ("and", "or"):
                    self.state_tags.setdefault(base, []).append(
                        ConfigTag(name, operator)
                    )
            elif local == "QUMOperation":
                name = _xattr(el, "name")
                caller = _xattr(el, "caller")
                callee = _xattr(el, "callee")
                if name and caller and callee:
                    self.operations.append(OperationSignature(name, caller, callee))


def _component_profile(stereo: ET.Element) -> tuple[tuple[RateEntry, ...], tuple[AttributeDecl, ...]]:
    rates = []
    attributes = []
    for child in stereo:
        local = _local(child.tag)
        if local == "rate":
            name = _xattr(child, "name")
            value = _float_attr(child, "value")
            if name and value is not None:
                rates.append(RateEntry(name, value))
        elif local == "attribute":
            name = _xattr(child, "name")
            if not name:
                continue
            try:
                attributes.append(
                    AttributeDecl(
                        name,
                        int(_xattr(child, "lo") or 0),
                        int(_xattr(child, "hi") or 0),
                        int(_xattr(child, "init") or 0),
                    )
                )
            except ValueError:
                raise XmlSyntax(0, f"bad bounds on attribute {name!r}") from None
    return tuple(rates), tuple(attributes)


def _state_tree(
    subvertex: ET.Element,
    names: dict[str, str],
    tags: dict[str, list[ConfigTag]],
) -> Optional[State]:
    name = _xattr(subvertex, "name")
    if name is None:
        return None
    state_id = _xattr(subvertex, "id")
    if state_id is not None:
        names[state_id] = name
    children: list[State] = []
    initial = None
    for region in subvertex:
        if _local(region.tag) != "region":
            continue
        initial = _xattr(region, "initial") or initial
        for child in region:
            if _local(child.tag) == "subvertex":
                built = _state_tree(child, names, tags)
                if built is not None:
                    children.append(built)
    own_tags = tuple(tags.get(state_id or "", ()))
    entry_ops = tuple((_xattr(subvertex, "entryOps") or "").split())
    return State(
        name, children=tuple(children), initial=initial, entry_ops=entry_ops, tags=own_tags
    )


def _build_transition(
    tel: ET.Element,
    state_names: dict[str, str],
    stereos: _Stereotypes,
) -> Optional[Transition]:
    source = state_names.get(_xattr(tel, "source") or "")
    target = state_names.get(_xattr(tel, "target") or "")
    if source is None or target is None:
        return None
    kind = TransitionKind.PLAIN
    rate = None
    rate_name = None
    operation = None
    guard = None
    applied = stereos.transitions.get(_xattr(tel, "id") or "")
    if applied is not None:
        kind, sel = applied
        rate = _float_attr(sel, "rate")
        rate_name = _xattr(sel, "rateName")
        operation = _xattr(sel, "operation")
        guard = _guard_attr(sel, "guard")
    return Transition(
        source,
        target,
        kind,
        rate=rate,
        rate_name=rate_name,
        operation=operation,
        guard=guard,
        name=_xattr(tel, "name"),
    )


class _MachineShell:
    """One ownedBehavior walked, transitions still unresolved.

    Transition endpoints may reference states of a sibling machine in the same
    class (repair transitions back into the normal machine do), so id
    resolution happens class-wide after every machine has been walked.
    """

    def __init__(self, owned: ET.Element, class_state_names: dict[str, str],
                 tags: dict[str, list[ConfigTag]]):
        self.machine_id = _xattr(owned, "id")
        self.name = _xattr(owned, "name") or ""
        self.states: list[State] = []
        self.transition_els: list[ET.Element] = []
        self.initial = None
        for region in owned:
            if _local(region.tag) != "region":
                continue
            self.initial = _xattr(region, "initial") or self.initial
            for child in region:
                local = _local(child.tag)
                if local == "subvertex":
                    built = _state_tree(child, class_state_names, tags)
                    if built is not None:
                        self.states.append(built)
                elif local == "transition":
                    self.transition_els.append(child)

    def build(self, class_state_names: dict[str, str], stereos: _Stereotypes) -> tuple[StateMachine, bool]:
        transitions = []
        for tel in self.transition_els:
            built = _build_transition(tel, class_state_names, stereos)
            if built is not None:
                transitions.append(built)
        entry = None
        failure_stereo = stereos.failure_machines.get(self.machine_id or "")
        if failure_stereo is not None:
            entry = FailureEntry(
                name=_xattr(failure_stereo, "entryName") or "",
                rate=_float_attr(failure_stereo, "entryRate"),
                rate_name=_xattr(failure_stereo, "entryRateName"),
                guard=_guard_attr(failure_stereo, "entryGuard"),
                ops=tuple((_xattr(failure_stereo, "entryOps") or "").split()),
            )
        machine = StateMachine(
            name=self.name,
            states=tuple(self.states),
            initial=self.initial,
            transitions=tuple(transitions),
            entry=entry,
        )
        return machine, failure_stereo is not None


def parse_xmi(data: bytes) -> QumModel:
    """Parse an XMI document into an unvalidated model."""
    root = parse_bytes(data)
    if _local(root.tag) != "XMI":
        raise UnsupportedXmiVersion("document root is not an xmi:XMI element")
    version = _xattr(root, "version")
    if version != "2.1":
        raise UnsupportedXmiVersion(f"xmi:version {version!r}, need 2.1")

    model_el = next((el for el in root if _local(el.tag) == "Model"), None)
    if model_el is None:
        raise MissingProfileApplication("document has no uml:Model element")
    applied = False
    for pa in model_el.iter():
        if _local(pa.tag) != "profileApplication":
            continue
        blobs = list(pa.attrib.values())
        for child in pa.iter():
            blobs.extend(child.attrib.values())
        if any("quantum" in blob.lower() for blob in blobs):
            applied = True
            break
    if not applied:
        raise MissingProfileApplication("no QuantUM profile application on the model")

    stereos = _Stereotypes(root)

    components: list[QumComponent] = []
    for el in model_el.iter():
        if _local(el.tag) != "packagedElement" or _xattr(el, "type") != "uml:Class":
            continue
        class_id = _xattr(el, "id")
        class_name = _xattr(el, "name")
        if class_id is None or class_name is None:
            continue
        stereo = stereos.components.get(class_id)
        if stereo is None:
            continue
        rates, attributes = _component_profile(stereo)
        class_state_names: dict[str, str] = {}
        shells = []
        for owned in el:
            if _local(owned.tag) != "ownedBehavior":
                continue
            if _xattr(owned, "type") != "uml:StateMachine":
                continue
            shells.append(_MachineShell(owned, class_state_names, stereos.state_tags))
        normal = None
        failures = []
        for shell in shells:
            machine, is_failure = shell.build(class_state_names, stereos)
            if shell.machine_id in stereos.normal_machines:
                normal = machine
            elif is_failure:
                failures.append(machine)
        components.append(
            QumComponent(
                name=class_name,
                normal=normal,
                failures=tuple(failures),
                rates=rates,
                attributes=attributes,
            )
        )

    return QumModel(
        name=_xattr(model_el, "name") or "",
        components=tuple(components),
        operations=tuple(stereos.operations),
    )
