"""Scenario parsing and execution."""
import pytest

from asmvent import load
from asmvent.errors import ModelSyntaxError, SetOnControlled
from asmvent.interpreter import run
from asmvent.scenario import (
    CheckCmd,
    FailedCheck,
    Pass,
    SetCmd,
    StepCmd,
    counterexample_to_scenario,
    load_bundled,
    parse_scenario,
    run_scenario,
)
from asmvent.syntax import CLOCK_FUNCTION
from asmvent.verify import check_invariant, free_boolean, parse_property


def test_bundled_pcv_start_is_the_full_listing():
    scenario = load_bundled("pcv_start.avalla")
    assert len(scenario) == 30
    kinds = [type(c).__name__ for c in scenario.commands]
    assert kinds.count("StepCmd") == 6
    assert kinds.count("SetCmd") == 4
    assert kinds.count("CheckCmd") == 20


def test_single_step_scenario():
    scenario = parse_scenario("step\n")
    assert len(scenario) == 1
    assert isinstance(scenario.commands[0], StepCmd)


def test_set_on_controlled_rejected():
    scenario = parse_scenario("set state := PCV_STATE;\nstep\n")
    with pytest.raises(SetOnControlled):
        run_scenario(load(1), scenario)


def test_syntax_errors():
    with pytest.raises(ModelSyntaxError):
        parse_scenario("chek state = STARTUP;\n")
    with pytest.raises(ModelSyntaxError):
        parse_scenario("set startupEnded = true;\n")  # needs :=


@pytest.mark.parametrize("level", [1, 2, 3])
def test_pcv_start_passes_on_levels_1_to_3(level):
    result = run_scenario(load(level), load_bundled("pcv_start.avalla"))
    assert isinstance(result, Pass)
    assert result.steps == 6
    assert result.checks == 20


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_initial_state_check_passes_everywhere(level):
    result = run_scenario(load(level), parse_scenario("check state = STARTUP;\n"))
    assert result.passed


def test_wrong_valve_expectation_fails():
    scenario = parse_scenario(
        "set startupEnded := true;\nstep\n"
        "set selfTestPassed := true;\nstep\n"
        "check state = VENTILATIONOFF;\n"
        "check oValve = CLOSED;\n")  # the output valve is open when off
    result = run_scenario(load(1), scenario)
    assert isinstance(result, FailedCheck)
    assert result.location == "oValve"
    assert result.expected == "CLOSED"
    assert result.actual == "OPEN"
    assert result.index == 5


def test_scenario_equals_run_with_scripted_provider():
    m = load(1)
    text = (
        "set startupEnded := true;\nstep\n"
        "set selfTestPassed := true;\nstep\n"
        "set startVentilation := true;\nset respirationMode := PCV;\nstep\n"
        "step\nstep\nstep\n")
    scenario = parse_scenario(text)
    result = run_scenario(m, scenario)
    assert result.passed

    held = {f.name: (False if f.codomain == "Boolean"
                     else m.domains[f.codomain][0])
            for f in m.monitored_inputs()}
    envs = []
    sets = [
        {"startupEnded": True},
        {"selfTestPassed": True},
        {"startVentilation": True, "respirationMode": "PCV"},
        {}, {}, {},
    ]
    for i, changes in enumerate(sets):
        held.update(changes)
        env = dict(held)
        env[CLOCK_FUNCTION] = i + 1
        envs.append(env)
    trace = run(m, envs, 6)
    assert trace.states[-1].controlled["state"] == "PCV_STATE"
    assert trace.states[-1].controlled["phase"] == "EXPIRATION"

    # replaying the same scenario with a final check agrees with the trace
    final = run_scenario(m, parse_scenario(text + "check phase = EXPIRATION;\n"))
    assert final.passed


def test_monitored_values_persist_between_steps():
    m = load(1)
    text = (
        "set startupEnded := true;\n"
        "step\nstep\n"  # startupEnded stays true; selfTest not passed yet
        "check state = SELFTEST;\n")
    assert run_scenario(m, parse_scenario(text)).passed


def test_counterexample_reimport_reproduces_failure_step():
    m = load(2)
    cex = check_invariant(m, parse_property("not f(iValve = oValve)", m),
                          free_boolean())
    scenario = parse_scenario(counterexample_to_scenario(m, cex))
    result = run_scenario(m, scenario)
    assert isinstance(result, FailedCheck)
    steps_before_failure = sum(
        1 for c in scenario.commands[: result.index] if isinstance(c, StepCmd))
    assert steps_before_failure == cex.violated_at
