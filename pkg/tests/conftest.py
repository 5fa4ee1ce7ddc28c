"""Shared model builders for the test suite."""

from __future__ import annotations

import pytest

from qum.model import (
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
    validate,
)

K = TransitionKind


def two_state_model() -> QumModel:
    """One component, one working state, one failure state at rate 0.01."""
    mc = QumComponent(
        name="mc",
        normal=StateMachine(name="Work", states=(State("Ok"),), initial="Ok"),
        failures=(
            StateMachine(
                name="Broken",
                states=(State("Failed"),),
                initial="Failed",
                entry=FailureEntry(name="fail_mc", rate=0.01),
            ),
        ),
    )
    return QumModel(name="tiny", components=(mc,))


def serial_chain_model(rate1: float = 1.0, rate2: float = 1.0) -> QumModel:
    """Ok -> Mid -> Failed, both steps stochastic; failure part is Mid/Failed."""
    mc = QumComponent(
        name="mc",
        normal=StateMachine(name="Work", states=(State("Ok"),), initial="Ok"),
        failures=(
            StateMachine(
                name="Decay",
                states=(State("Mid"), State("Failed")),
                initial="Mid",
                transitions=(
                    Transition("Mid", "Failed", K.STOCHASTIC, rate=rate2),
                ),
                entry=FailureEntry(name="step1", rate=rate1),
            ),
        ),
    )
    return QumModel(name="serial", components=(mc,))


def composite_model() -> QumModel:
    """Composite A over A1/A2, sibling B, single failure state (id 4)."""
    mc = QumComponent(
        name="mc",
        normal=StateMachine(
            name="Work",
            states=(
                State("A", children=(State("A1"), State("A2")), initial="A1"),
                State("B"),
            ),
            initial="A",
            transitions=(Transition("B", "A", K.STOCHASTIC, rate=1.0),),
        ),
        failures=(
            StateMachine(
                name="Broken",
                states=(State("Failed"),),
                initial="Failed",
                entry=FailureEntry(name="fail_mc", rate=0.01),
            ),
        ),
    )
    return QumModel(name="nested", components=(mc,))


def _sensor(name: str, report_op: str, failure_name: str, with_repair: bool) -> QumComponent:
    guard = Guard("acceleration", ">", 3)
    repair = (
        (Transition("Degraded", "Operational", K.REPAIR, rate_name="sensorRepair"),)
        if with_repair
        else ()
    )
    rates = [RateEntry(failure_name, 1e-5)]
    if with_repair:
        rates.append(RateEntry("sensorRepair", 0.01))
    return QumComponent(
        name=name,
        normal=StateMachine(
            name="Sensing",
            states=(State("Operational"),),
            initial="Operational",
            transitions=(
                Transition(
                    "Operational",
                    "Operational",
                    K.CALL,
                    operation=report_op,
                    rate=3600.0,
                    guard=guard,
                ),
            ),
        ),
        failures=(
            StateMachine(
                name="SensorDegraded",
                states=(State("Degraded"),),
                initial="Degraded",
                transitions=repair,
                entry=FailureEntry(name=failure_name, rate_name=failure_name, guard=guard),
            ),
        ),
        rates=tuple(rates),
        attributes=(AttributeDecl("acceleration", 0, 5, 0),),
    )


def airbag_model() -> QumModel:
    """Airbag control unit: two sensors, controller, power FET, squib driver.

    The sensors stay quiescent (acceleration fixed at 0), so spontaneous
    deployment can only come from failure patterns. The controller's failure
    pattern runs the fire sequence enable/arm/fire against the FET and the
    squib driver.
    """
    main_sensor = _sensor("MainSensor", "reportCrashMain", "MainSensorFailure", True)
    safety_sensor = _sensor("SafetySensor", "reportCrashSafety", "SafetySensorFailure", False)

    micro = QumComponent(
        name="MicroController",
        normal=StateMachine(
            name="CrashEvaluation",
            states=(
                State(
                    "Vigilant",
                    children=(State("Monitor"), State("MainAlert")),
                    initial="Monitor",
                    tags=(ConfigTag("system_monitoring", "or"),),
                ),
                State("Crash"),
                State("CrashArmed"),
                State("CrashEnabled"),
                State("CrashDeployed"),
            ),
            initial="Vigilant",
            transitions=(
                Transition("Monitor", "Monitor", K.STOCHASTIC, rate_name="heartbeat"),
                Transition("Monitor", "MainAlert", K.TRIGGER, operation="reportCrashMain"),
                Transition(
                    "MainAlert",
                    "Crash",
                    K.TRIGGER,
                    operation="reportCrashSafety",
                    guard=Guard("consecHigh", ">=", 3),
                ),
                Transition(
                    "MainAlert", "Monitor", K.STOCHASTIC, rate=180000.0, name="evaluationTimeout"
                ),
                Transition("Crash", "CrashArmed", K.CALL, operation="armFASIC", rate_name="commandRate"),
                Transition(
                    "CrashArmed", "CrashEnabled", K.CALL, operation="enableFET", rate_name="commandRate"
                ),
                Transition(
                    "CrashEnabled", "CrashDeployed", K.CALL, operation="fireFASIC", rate_name="commandRate"
                ),
            ),
        ),
        failures=(
            StateMachine(
                name="FireSequence",
                states=(
                    State("WaitEnable"),
                    State("WaitArm"),
                    State("WaitFire"),
                    State("FailedDeployed"),
                ),
                initial="WaitEnable",
                transitions=(
                    Transition("WaitEnable", "WaitArm", K.CALL, operation="enableFET", rate_name="commandRate"),
                    Transition("WaitArm", "WaitFire", K.CALL, operation="armFASIC", rate_name="commandRate"),
                    Transition(
                        "WaitFire", "FailedDeployed", K.CALL, operation="fireFASIC", rate_name="commandRate"
                    ),
                ),
                entry=FailureEntry(name="MicroControllerFailure", rate_name="MicroControllerFailure"),
            ),
        ),
        rates=(
            RateEntry("MicroControllerFailure", 1e-6),
            RateEntry("heartbeat", 600.0),
            RateEntry("commandRate", 3600.0),
        ),
        attributes=(AttributeDecl("consecHigh", 0, 3, 0),),
    )

    fet = QumComponent(
        name="FET",
        normal=StateMachine(
            name="PowerGate",
            states=(
                State("Disabled"),
                State("Enabled", tags=(ConfigTag("system_armed", "and"),)),
            ),
            initial="Disabled",
            transitions=(
                Transition("Disabled", "Enabled", K.TRIGGER, operation="enableFET"),
                Transition("Enabled", "Enabled", K.CALL, operation="supplyPower", rate_name="supplyRate"),
            ),
        ),
        failures=(
            StateMachine(
                name="StuckConducting",
                states=(State("StuckHigh"),),
                initial="StuckHigh",
                transitions=(
                    Transition("StuckHigh", "StuckHigh", K.TRIGGER, operation="enableFET"),
                    Transition(
                        "StuckHigh", "StuckHigh", K.CALL, operation="supplyPower", rate_name="supplyRate"
                    ),
                ),
                entry=FailureEntry(
                    name="FETStuckHigh", rate_name="FETStuckHigh", guard=Guard("load", ">", 3)
                ),
            ),
        ),
        rates=(RateEntry("FETStuckHigh", 1e-7), RateEntry("supplyRate", 3600.0)),
        attributes=(AttributeDecl("load", 0, 5, 0),),
    )

    fasic = QumComponent(
        name="FASIC",
        normal=StateMachine(
            name="SquibDriver",
            states=(
                State("Idle"),
                State("Armed", tags=(ConfigTag("system_armed", "and"),)),
                State("Fired", tags=(ConfigTag("inadvertent_deployment", "or"),)),
            ),
            initial="Idle",
            transitions=(
                Transition("Idle", "Armed", K.TRIGGER, operation="armFASIC"),
                Transition("Armed", "Fired", K.TRIGGER, operation="fireFASIC"),
            ),
        ),
        failures=(
            StateMachine(
                name="ShortCircuit",
                states=(State("Shorted", tags=(ConfigTag("inadvertent_deployment", "or"),)),),
                initial="Shorted",
                entry=FailureEntry(name="FASICShortage", rate_name="FASICShortage"),
            ),
            StateMachine(
                name="OutputStuckHigh",
                states=(
                    State("OutputHigh"),
                    State("IgnitedStuck", tags=(ConfigTag("inadvertent_deployment", "or"),)),
                ),
                initial="OutputHigh",
                transitions=(
                    Transition("OutputHigh", "IgnitedStuck", K.TRIGGER, operation="supplyPower"),
                ),
                entry=FailureEntry(name="FASICStuckHigh", rate_name="FASICStuckHigh"),
            ),
            StateMachine(
                name="ArmLatch",
                states=(
                    State("LatchedArmed"),
                    State("LatchedFired", tags=(ConfigTag("inadvertent_deployment", "or"),)),
                ),
                initial="LatchedArmed",
                transitions=(
                    Transition("LatchedArmed", "LatchedArmed", K.TRIGGER, operation="armFASIC"),
                    Transition("LatchedArmed", "LatchedFired", K.TRIGGER, operation="fireFASIC"),
                ),
                entry=FailureEntry(name="FASICStuckArmed", rate_name="FASICStuckArmed"),
            ),
        ),
        rates=(
            RateEntry("FASICShortage", 1e-8),
            RateEntry("FASICStuckHigh", 1e-7),
            RateEntry("FASICStuckArmed", 1e-7),
        ),
    )

    return QumModel(
        name="AirbagControlUnit",
        components=(main_sensor, safety_sensor, micro, fet, fasic),
        operations=(
            OperationSignature("reportCrashMain", "MainSensor", "MicroController"),
            OperationSignature("reportCrashSafety", "SafetySensor", "MicroController"),
            OperationSignature("enableFET", "MicroController", "FET"),
            OperationSignature("armFASIC", "MicroController", "FASIC"),
            OperationSignature("fireFASIC", "MicroController", "FASIC"),
            OperationSignature("supplyPower", "FET", "FASIC"),
        ),
    )


@pytest.fixture
def airbag() -> QumModel:
    return validate(airbag_model())


@pytest.fixture
def two_state() -> QumModel:
    return validate(two_state_model())
