"""PRISM text generation: exact shapes, determinism, parseability."""

from __future__ import annotations

from qum import prismcheck
from qum.compose import build_global
from qum.prismgen import emit_labels, emit_model, emit_module, translate

from conftest import airbag_model, two_state_model

from qum.model import validate


TWO_STATE_EXPECTED = """ctmc

const double T;

module mc
  mc_state : [0..1] init 0;

  [] mc_state=0 -> 0.01 : (mc_state'=1);
endmodule
"""


def test_two_state_golden():
    model = validate(two_state_model())
    assert emit_model(build_global(model)) == TWO_STATE_EXPECTED


def test_translate_shortcut():
    model = validate(two_state_model())
    assert translate(model) == TWO_STATE_EXPECTED


def test_airbag_key_lines(airbag):
    text = emit_model(build_global(airbag))
    lines = text.splitlines()
    for expected in [
        "ctmc",
        "const double T;",
        "module mainsensor",
        "  mainsensor_state : [0..1] init 0;",
        "  mainsensor_acceleration : [0..5] init 0;",
        "  [reportCrashMain] mainsensor_state=0 & mainsensor_acceleration > 3 -> 3600.0 : (mainsensor_state'=0);",
        "  [] mainsensor_state=0 & mainsensor_acceleration > 3 -> 1e-05 : (mainsensor_state'=1);",
        "  [] mainsensor_state=1 -> 0.01 : (mainsensor_state'=0);",
        "  microcontroller_state : [0..10] init 1;",
        "  microcontroller_consecHigh : [0..3] init 0;",
        "  [] microcontroller_state=1 -> 600.0 : (microcontroller_state'=1);",
        "  [reportCrashMain] microcontroller_state=1 -> 1 : (microcontroller_state'=2);",
        "  [reportCrashSafety] microcontroller_state=2 & microcontroller_consecHigh >= 3 -> 1 : (microcontroller_state'=3);",
        "  [] microcontroller_state=2 -> 180000.0 : (microcontroller_state'=1);",
        "  [armFASIC] microcontroller_state=3 -> 3600.0 : (microcontroller_state'=4);",
        "  [] microcontroller_state=1 -> 1e-06 : (microcontroller_state'=7);",
        "  [] microcontroller_state=6 -> 1e-06 : (microcontroller_state'=7);",
        "  [enableFET] microcontroller_state=7 -> 3600.0 : (microcontroller_state'=8);",
        "  [fireFASIC] microcontroller_state=9 -> 3600.0 : (microcontroller_state'=10);",
        "  fet_state : [0..2] init 0;",
        "  [enableFET] fet_state=0 -> 1 : (fet_state'=1);",
        "  [] fet_state=0 & fet_load > 3 -> 1e-07 : (fet_state'=2);",
        "  [supplyPower] fet_state=2 -> 3600.0 : (fet_state'=2);",
        "  fasic_state : [0..7] init 0;",
        "  [armFASIC] fasic_state=0 -> 1 : (fasic_state'=1);",
        "  [fireFASIC] fasic_state=1 -> 1 : (fasic_state'=2);",
        "  [] fasic_state=0 -> 1e-08 : (fasic_state'=3);",
        "  [supplyPower] fasic_state=4 -> 1 : (fasic_state'=5);",
        'label "system_monitoring" = (0 <= microcontroller_state & microcontroller_state <= 2);',
        'label "system_armed" = (fet_state=1)&(fasic_state=1);',
        'label "inadvertent_deployment" = (fasic_state=2)|(fasic_state=3)|(fasic_state=5)|(fasic_state=7);',
    ]:
        assert expected in lines, f"missing line: {expected}"


def test_airbag_module_order(airbag):
    text = emit_model(build_global(airbag))
    headers = [l for l in text.splitlines() if l.startswith("module ")]
    assert headers == [
        "module mainsensor",
        "module safetysensor",
        "module microcontroller",
        "module fet",
        "module fasic",
    ]


def test_emit_is_deterministic(airbag):
    first = emit_model(build_global(airbag))
    second = emit_model(build_global(validate(airbag_model())))
    assert first == second
    assert "\r" not in first and first.endswith("\n")


def test_emitted_text_parses(airbag):
    gm = build_global(airbag)
    pf = prismcheck.parse(emit_model(gm))
    assert pf.model_type == "ctmc"
    assert pf.constants == ["T"]
    assert [m.name for m in pf.modules] == [
        "mainsensor",
        "safetysensor",
        "microcontroller",
        "fet",
        "fasic",
    ]
    counts = {m.name: len(m.commands) for m in pf.modules}
    assert counts == {
        "mainsensor": 3,
        "safetysensor": 2,
        "microcontroller": 16,
        "fet": 6,
        "fasic": 14,
    }
    assert set(pf.labels) == {
        "system_monitoring",
        "system_armed",
        "inadvertent_deployment",
    }
    # Variable order in the file matches the engine's state tuple layout.
    assert [v.name for v in pf.var_order()] == list(gm.var_names)
    fasic_var = next(v for m in pf.modules if m.name == "fasic" for v in m.variables)
    assert (fasic_var.lo, fasic_var.hi, fasic_var.init) == (0, 7, 0)


def test_module_without_commands():
    # A component whose only machine has no transitions still renders a module.
    from qum.model import FailureEntry, QumComponent, QumModel, State, StateMachine

    comp = QumComponent(
        name="x",
        normal=None,
        failures=(
            StateMachine(
                name="F",
                states=(State("Dead"),),
                initial="Dead",
                entry=FailureEntry(name="fail_x", rate=0.5),
            ),
        ),
    )
    gm = build_global(validate(QumModel("m", (comp,))))
    text = emit_model(gm)
    assert "module x\n  x_state : [0..1] init 0;\n\n  [] x_state=0 -> 0.5 : (x_state'=1);\nendmodule" in text


def test_labels_empty_without_configs():
    gm = build_global(validate(two_state_model()))
    assert emit_labels(gm.encoding) == ""
