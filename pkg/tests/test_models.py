"""Bundled controller levels and timing configuration."""
import itertools
import random

import pytest

from asmvent import default_config, initial_state, load, run, step
from asmvent.errors import ConfigError
from asmvent.interpreter import held_env_provider, random_provider
from asmvent.models import fast_timers_config, make_config

DUR_KEYS = dict(minInspTimePSV=300, maxInspTimePSV=3000, minExpTimePSV=500,
                apneaLag=30000, triggerWindowDelay=300, inPauseDur=1000,
                exPauseDur=1000, rmDur=1000)


def test_level0_signature():
    m = load(0)
    assert len(m.functions_of_kind("monitored", own_only=True)) == 5
    assert len(m.functions_of_kind("controlled", own_only=True)) == 1


def test_level2_phase_domain_includes_pauses():
    m = load(2)
    assert set(m.domains["Phase"]) >= {"INPAUSE", "RM", "EXPAUSE"}


def test_level3_pressure_inputs():
    m = load(3)
    monitored = {f.name for f in m.functions_of_kind("monitored", own_only=True)}
    assert {"dropPAW_ITS", "pawGTMaxPinsp"} <= monitored


def test_initial_state_pinned():
    for level in range(1, 4):
        s = initial_state(load(level))
        assert s.controlled["state"] == "STARTUP"
        assert s.controlled["iValve"] == "CLOSED"
        assert s.controlled["oValve"] == "OPEN"
        assert s.controlled["stopVentilation"] is False
    assert initial_state(load(2)).controlled["apneaBackupMode"] is False


def test_default_config_durations():
    cfg = default_config()
    assert cfg.respiratory_rate == 12
    assert cfg.ie_ratio == (1, 2)
    # T = 60/RR = 5 s; T_insp = T * I/(I+E) = 5/3 s, in rounded milliseconds
    assert cfg.inspiration_dur_pcv == round(5000 / 3)
    assert cfg.expiration_dur_pcv == 5000 - round(5000 / 3)
    assert cfg.apnea_lag == 30000
    assert cfg.trigger_window_delay == 300


def test_config_cycle_sums_to_rate_across_rates():
    for rr in (7, 12, 15, 20, 30, 60):
        cfg = make_config(rr, (1, 2), **DUR_KEYS)
        assert cfg.inspiration_dur_pcv + cfg.expiration_dur_pcv == round(60000 / rr)


def test_symmetric_ratio_at_rr60():
    cfg = make_config(60, (1, 1), **DUR_KEYS)
    assert cfg.inspiration_dur_pcv == 500
    assert cfg.expiration_dur_pcv == 500


def test_zero_ratio_rejected():
    with pytest.raises(ConfigError):
        make_config(12, (0, 2), **DUR_KEYS)
    with pytest.raises(ConfigError):
        make_config(0, (1, 2), **DUR_KEYS)


def test_fast_timers_config_whole_seconds():
    cfg = fast_timers_config()
    assert cfg.inspiration_dur_pcv % 1000 == 0
    assert cfg.expiration_dur_pcv % 1000 == 0
    assert cfg.apnea_lag == 2000


def level_machine_random_walk(level, seed, steps=400):
    m = load(level)
    trace = run(m, random_provider(m, seed=seed), steps)
    return m, trace


@pytest.mark.parametrize("level", [1, 2, 3])
def test_ventilationoff_valve_safety_random_walk(level):
    _m, trace = level_machine_random_walk(level, seed=5)
    for s in trace.states:
        if s.controlled["state"] == "VENTILATIONOFF":
            assert s.controlled["iValve"] == "CLOSED"
            assert s.controlled["oValve"] == "OPEN"


def test_level1_valves_always_complementary_random_walk():
    _m, trace = level_machine_random_walk(1, seed=6)
    for s in trace.states:
        assert s.controlled["iValve"] != s.controlled["oValve"]


@pytest.mark.parametrize("level", [2, 3])
def test_pause_and_rm_valve_discipline_random_walk(level):
    _m, trace = level_machine_random_walk(level, seed=8, steps=600)
    pauses_seen = 0
    for s in trace.states:
        running = s.controlled["state"] in ("PCV_STATE", "PSV_STATE")
        if s.controlled["phase"] in ("INPAUSE", "EXPAUSE") and running:
            pauses_seen += 1
            assert s.controlled["iValve"] == "CLOSED"
            assert s.controlled["oValve"] == "CLOSED"
        if s.controlled["phase"] == "RM" and running:
            assert s.controlled["iValve"] == "OPEN"
            assert s.controlled["oValve"] == "CLOSED"
    assert pauses_seen > 0


@pytest.mark.parametrize("level", [2, 3])
def test_apnea_backup_only_via_apnea_transition(level):
    m, trace = level_machine_random_walk(level, seed=11, steps=600)
    for before, after in zip(trace.states, trace.states[1:]):
        was, now = before.controlled["apneaBackupMode"], after.controlled["apneaBackupMode"]
        if not was and now:
            # apnea fallback: enters PCV inspiration from PSV expiration
            assert before.controlled["state"] == "PSV_STATE"
            assert before.controlled["phase"] == "EXPIRATION"
            assert after.controlled["state"] == "PCV_STATE"
            assert after.controlled["phase"] == "INSPIRATION"
        if was and not now:
            # cleared only on the PCV -> PSV switch
            assert before.controlled["state"] == "PCV_STATE"
            assert after.controlled["state"] == "PSV_STATE"


@pytest.mark.parametrize("level", [1, 2, 3])
def test_stop_never_fires_from_inspiration(level):
    _m, trace = level_machine_random_walk(level, seed=13, steps=600)
    stops = 0
    for before, after in zip(trace.states, trace.states[1:]):
        if (before.controlled["state"] in ("PCV_STATE", "PSV_STATE")
                and after.controlled["state"] == "VENTILATIONOFF"):
            stops += 1
            assert before.controlled["phase"] == "EXPIRATION"
    assert stops > 0


def test_stop_latched_in_inspiration_honored_in_expiration():
    m = load(1)
    prov = held_env_provider(m, {"startupEnded": True, "selfTestPassed": True,
                                 "respirationMode": "PCV"})
    state = initial_state(m)
    step_no = 0

    def advance(**changes):
        nonlocal state, step_no
        for k, v in changes.items():
            prov.set(k, v)
        env = prov(step_no, state)
        step_no += 1
        state = __import__("asmvent").step(m, state, env)

    advance()            # -> SELFTEST
    advance()            # -> VENTILATIONOFF
    advance(startVentilation=True)  # -> PCV inspiration
    assert state.controlled["phase"] == "INSPIRATION"
    advance(startVentilation=False, stopRequested=True)  # latch during inspiration
    assert state.controlled["stopVentilation"] is True
    assert state.controlled["state"] == "PCV_STATE"
    advance(stopRequested=False)  # inspiration expires -> expiration
    assert state.controlled["phase"] == "EXPIRATION"
    advance()             # latched stop honored
    assert state.controlled["state"] == "VENTILATIONOFF"
    assert state.controlled["stopVentilation"] is False
