"""Acceptance gate: one test per shipped criterion, one verdict line each.

Run with `pytest -v tests/test_acceptance.py` to get the per-criterion
pass/fail lines; each test also prints an `ACCEPTANCE n: PASS/FAIL` verdict.
"""

from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np
import pytest

import qum
from conftest import (
    airbag_model,
    composite_model,
    serial_chain_model,
    two_state_model,
)
from qum.compose import build_global, config_predicate, failure_predicate, replay
from qum.engine import build_ctmc, collect_counterexample, transient_until
from qum.faulttree import build_fault_tree
from qum.ingest import parse_native, parse_xmi
from qum.model import (
    FailureEntry,
    QumComponent,
    QumModel,
    State,
    StateMachine,
    validate,
)
from qum.prismgen import translate
from qum.cslgen import emit_csl, generate
from qum.seqdiag import append_xmi, build_diagram
from qum.xmlbase import parse_bytes
from test_engine import chain_of, expm_reference, random_ctmc
from test_seqdiag import alt_operands

FIXTURES = Path(qum.__file__).parent / "fixtures"

AIRBAG_CSL = """// ComponentFailure: MainSensor
P=? [ (true) U<=T (mainsensor_state > 0) ]

// ComponentFailure: SafetySensor
P=? [ (true) U<=T (safetysensor_state > 0) ]

// ComponentFailure: MicroController
P=? [ (true) U<=T (microcontroller_state > 6) ]

// ComponentFailure: FET
P=? [ (true) U<=T (fet_state > 1) ]

// ComponentFailure: FASIC
P=? [ (true) U<=T (fasic_state > 2) ]

// AnyComponentFailure: AirbagControlUnit
P=? [ (true) U<=T ((mainsensor_state > 0)|(safetysensor_state > 0)|(microcontroller_state > 6)|(fet_state > 1)|(fasic_state > 2)) ]

// StateConfiguration: system_monitoring
P=? [ (true) U<=T (system_monitoring) ]

// StateConfiguration: system_armed
P=? [ (true) U<=T (system_armed) ]

// StateConfiguration: inadvertent_deployment
P=? [ (true) U<=T (inadvertent_deployment) ]

// RawStateFormula: system_monitoring
((0 <= microcontroller_state & microcontroller_state <= 2))

// RawStateFormula: system_armed
((fet_state=1)&(fasic_state=1))

// RawStateFormula: inadvertent_deployment
((fasic_state=2)|(fasic_state=3)|(fasic_state=5)|(fasic_state=7))
"""


def _verdict(criterion: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def airbag_analysis():
    """Timed full analysis of the bundled airbag model at T=10."""
    model = validate(airbag_model())
    gm = build_global(model)
    started = time.perf_counter()
    chain = build_ctmc(gm)
    hazard = config_predicate(gm, model.config("inadvertent_deployment"))
    transient = transient_until(chain, hazard, 10.0)
    cx = collect_counterexample(chain, hazard, 10.0, transient=transient)
    tree = build_fault_tree(cx, gm, hazard, "inadvertent_deployment")
    elapsed = time.perf_counter() - started
    return gm, chain, hazard, transient, cx, tree, elapsed


def test_criterion_1_transient_probability_oracles():
    started = time.perf_counter()
    worst = 0.0
    chains = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        chain = random_ctmc(rng)
        assert chain.n_states <= 200
        chains += 1
        mask = np.zeros(chain.n_states, dtype=bool)
        mask[rng.choice(chain.n_states, size=max(1, chain.n_states // 5), replace=False)] = True
        for t in (0.1, 1.0, 10.0):
            got = transient_until(chain, mask, t)
            want = expm_reference(chain, mask, t)
            worst = max(worst, abs(got - want))
    _, two_state_chain = chain_of(two_state_model())
    analytic = abs(
        transient_until(two_state_chain, lambda s: s[0] >= 1, 100.0)
        - (1.0 - math.exp(-0.01 * 100.0))
    )
    elapsed = time.perf_counter() - started
    ok = chains >= 10 and worst <= 1e-6 and analytic <= 1e-9 and elapsed < 10.0
    _verdict(
        1, ok,
        f"{chains} random chains, worst |err|={worst:.2e} (tol 1e-6), "
        f"analytic |err|={analytic:.2e} (tol 1e-9), {elapsed:.1f}s (limit 10s)",
    )


def test_criterion_2_airbag_class_census(airbag_analysis):
    _, chain, _, transient, cx, tree, elapsed = airbag_analysis
    singletons = [c for c in tree.classes if len(c.events) == 1]
    ok = (
        len(tree.classes) == 5
        and len(singletons) == 1
        and singletons[0].events == ("FASICShortage",)
        and elapsed < 60.0
    )
    # the original experiment's 738 paths over a 3249-state/15390-transition
    # chain depended on that tool chain's encoding; recorded, not asserted
    _verdict(
        2, ok,
        f"{len(tree.classes)} classes (want 5), singleton(s) "
        f"{[c.events for c in singletons]}, {elapsed:.1f}s (limit 60s); "
        f"this encoding: {len(cx.paths)} paths over {chain.n_states} states / "
        f"{chain.n_transitions} transitions (reference run: 738 / 3249 / 15390)",
    )


def test_criterion_3_fire_sequence_order(airbag_analysis):
    gm, _, hazard, _, _, tree, _ = airbag_analysis
    fire_set = {"MicroControllerFailure", "enableFET", "armFASIC", "fireFASIC"}
    candidates = [c for c in tree.classes if set(c.events) >= fire_set]
    ok = bool(candidates)
    details = []
    for cls in candidates:
        gate_ok = cls.gate in ("pand", "seq")
        seq = cls.sequence
        order_ok = seq.index("enableFET") < seq.index("armFASIC") < seq.index("fireFASIC")
        if cls.gate == "seq":
            order_ok = order_ok and {("enableFET", "armFASIC"), ("armFASIC", "fireFASIC")} <= set(
                cls.order_pairs
            )
        run = replay(gm, seq)
        replay_ok = run.ok and hazard(run.final)
        ok = ok and gate_ok and order_ok and replay_ok
        details.append(f"{cls.gate}:{','.join(seq)}")
    _verdict(3, ok, f"{len(candidates)} class(es) with the fire sequence: " + "; ".join(details))


def test_criterion_4_csl_templates_golden():
    text = emit_csl(generate(validate(airbag_model())))
    ok = text == AIRBAG_CSL
    detail = "character-for-character match"
    if not ok:
        got_lines = text.splitlines()
        want_lines = AIRBAG_CSL.splitlines()
        diff_at = next(
            (i for i, (a, b) in enumerate(zip(got_lines, want_lines)) if a != b),
            min(len(got_lines), len(want_lines)),
        )
        detail = f"first difference at line {diff_at + 1}"
    _verdict(4, ok, detail)


def _clone_model(n: int) -> QumModel:
    comps = tuple(
        QumComponent(
            name=f"unit{i:02d}",
            normal=StateMachine(name="Work", states=(State("Ok"),), initial="Ok"),
            failures=(
                StateMachine(
                    name="Broken",
                    states=(State("Failed"),),
                    initial="Failed",
                    entry=FailureEntry(name=f"fail{i:02d}", rate=0.01),
                ),
            ),
        )
        for i in range(n)
    )
    return QumModel(name=f"clones{n}", components=comps)


def test_criterion_5_translation_linearity_and_determinism():
    ok = True
    detail = ""
    timings = {}
    for n in range(1, 51):
        model = validate(_clone_model(n))
        started = time.perf_counter()
        text = translate(model)
        timings[n] = time.perf_counter() - started
        modules = sum(1 for line in text.splitlines() if line.startswith("module "))
        commands = sum(1 for line in text.strip().splitlines() if line.lstrip().startswith("["))
        flats = sum(len(cm.transitions) for cm in build_global(model).machines)
        if modules != n or commands != flats:
            ok = False
            detail = f"N={n}: {modules} modules (want {n}), {commands} commands (want {flats})"
            break
    if ok:
        rerun = translate(validate(_clone_model(50)))
        first = translate(validate(_clone_model(50)))
        ok = rerun == first
        detail = (
            f"N=1..50 all linear, rerun bytes identical; wall-clock t(50)/t(10) = "
            f"{timings[50] / timings[10]:.1f} (reported, not asserted)"
        )
        if not ok:
            detail = "N=50 rerun bytes differ"
    _verdict(5, ok, detail)


def test_criterion_6_cross_front_end_equivalence():
    from_native = validate(parse_native((FIXTURES / "airbag.qum").read_text()))
    from_xmi = validate(parse_xmi((FIXTURES / "airbag.xmi").read_bytes()))
    ok = from_native == from_xmi
    _verdict(6, ok, "validated parses are structurally equal"
             if ok else "validated parses differ")


def test_criterion_7_counterexample_soundness(airbag_analysis):
    gm, _, hazard, transient, cx, _, _ = airbag_analysis
    cases = [("airbag/inadvertent_deployment", gm, hazard, transient, cx)]
    for name, model_fn, t in (
        ("two_state", two_state_model, 100.0),
        ("serial_chain", serial_chain_model, 10.0),
        ("composite", composite_model, 10.0),
    ):
        gm, chain = chain_of(model_fn())
        phi = failure_predicate(gm, "mc")
        prob = transient_until(chain, phi, t)
        cases.append((name, gm, phi, prob, collect_counterexample(chain, phi, t, transient=prob)))
    ok = True
    details = []
    for name, gm, phi, prob, collected in cases:
        replayed = all(
            (run := replay(gm, path.labels)).ok and phi(run.final) for path in collected.paths
        )
        mass = math.fsum(path.bound for path in collected.paths)
        bounded = mass <= prob + 1e-9
        ok = ok and replayed and bounded
        details.append(
            f"{name}: {len(collected.paths)} paths, replay {'ok' if replayed else 'BROKEN'}, "
            f"mass {mass:.3e} <= {prob:.3e}+eps {'ok' if bounded else 'VIOLATED'}"
        )
    _verdict(7, ok, "; ".join(details))


def test_criterion_8_sequence_diagram_xmi_round_trip(airbag_analysis):
    gm, _, _, _, _, tree, _ = airbag_analysis
    original = (FIXTURES / "airbag.xmi").read_bytes()
    diagram = build_diagram(tree.classes, gm, title="inadvertent_deployment T10")
    appended = append_xmi(diagram, original)
    root = parse_bytes(appended)
    idx = original.rindex(b"</uml:Model>")
    preserved = appended.startswith(original[:idx]) and appended.endswith(original[idx:])
    operands = len(alt_operands(root))
    ok = preserved and operands == len(tree.classes)
    _verdict(
        8, ok,
        f"re-parsed, outside bytes {'preserved' if preserved else 'CHANGED'}, "
        f"{operands} alt operands == {len(tree.classes)} classes",
    )
