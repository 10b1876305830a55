"""Timer semantics: reset, expiry, clock handling."""
import pytest

from asmvent import initial_state, parse, run, step
from asmvent.interpreter import eval_rule
from asmvent.syntax import MachineState

TIMER_BOX = """
asm TimerBox
import TimeLibrary
signature:
    monitored go : Boolean
    controlled fired : Boolean
    static dur : Duration
    timer t1 : dur
definitions:
    function dur = 5000
    rule r_check = if expired(t1) then fired := true endif
    main rule r_Main =
        par
            r_check[]
            if go then r_reset_timer[t1] endif
        endpar
default init s0:
    function fired = false
"""


def box():
    return parse(TIMER_BOX)


def test_initialisation_resets_all_timers():
    m = box()
    state = initial_state(m)
    assert state.controlled["start(t1)"] == 0
    assert state.controlled["clockMillis"] == 0


def test_reset_records_current_clock():
    m = box()
    state = initial_state(m)
    state = step(m, state, {"go": True, "mCurrTimeSecs": 7})
    assert state.controlled["start(t1)"] == 7000
    assert state.clock == 7000
    assert state.controlled["clockMillis"] == 7000


def test_two_resets_second_wins():
    # oracle: replay the per-step update sets by hand
    m = box()
    state = initial_state(m)
    body = m.rules[m.main_rule].body
    us1 = eval_rule(m, MachineState(state.controlled, {"go": True, "mCurrTimeSecs": 2000}, 2000), body)
    assert us1.updates["start(t1)"] == 2000
    mid = MachineState({**state.controlled, **us1.updates}, {}, 2000)
    us2 = eval_rule(m, MachineState(mid.controlled, {"go": True, "mCurrTimeSecs": 3000}, 3000), body)
    assert us2.updates["start(t1)"] == 3000  # the later reset overwrites the first


def test_expiry_boundary_is_inclusive():
    m = box()
    state = initial_state(m)  # start(t1) = 0, dur = 5000 ms
    at_4999 = step(m, state, {"go": False, "mCurrTimeSecs": 4.999})
    assert at_4999.controlled["fired"] is False
    at_5000 = step(m, state, {"go": False, "mCurrTimeSecs": 5})
    assert at_5000.controlled["fired"] is True


def test_one_second_harness_expires_after_two_steps():
    src = TIMER_BOX.replace("function dur = 5000", "function dur = 2000")
    m = parse(src)
    # reset at step 1 (clock 1 s); a 2 s timer expires at step 3 (clock 3 s)
    envs = [{"go": True, "mCurrTimeSecs": 1},
            {"go": False, "mCurrTimeSecs": 2},
            {"go": False, "mCurrTimeSecs": 3}]
    trace = run(m, envs, 3)
    fired = [s.controlled["fired"] for s in trace.states]
    assert fired == [False, False, False, True]


def test_expiry_is_monotone_until_reset():
    m = box()
    state = initial_state(m)
    expired_seen = False
    for sec in range(1, 12):
        state = step(m, state, {"go": False, "mCurrTimeSecs": sec})
        now_expired = state.clock - state.controlled["start(t1)"] >= 5000
        if expired_seen:
            assert now_expired
        expired_seen = expired_seen or now_expired
    assert expired_seen


def test_tick_refinement_keeps_expiry_boundaries():
    m = box()

    def expiry_seconds(tick_s):
        state = initial_state(m)
        out = []
        steps = int(12 / tick_s)
        for i in range(1, steps + 1):
            state = step(m, state, {"go": False, "mCurrTimeSecs": i * tick_s})
            if state.controlled["fired"]:
                out.append(i * tick_s)
                break
        return out

    assert expiry_seconds(1) == [5]
    assert expiry_seconds(0.5) == [5]  # halving the tick does not move the boundary
