"""RC lung model against its closed form, plus event detection."""
import math
import random

import pytest

from asmvent.errors import BothValvesOpen, ConfigError
from asmvent.lungsim import (
    CLOSED,
    EVENT_DROP_PAW,
    EVENT_FLOW_DROP,
    EffortProfile,
    EventDetector,
    LungPatient,
    LungSample,
    OPEN,
    VentCircuit,
    default_patient,
    detect_events,
    parse_profile_text,
    step_lung,
    waveform_csv,
)


def simulate_constant(patient, circuit, total_ms, dt_ms=10):
    samples = []
    t = 0
    while t < total_ms:
        patient, sample = step_lung(patient, circuit, dt_ms)
        samples.append(sample)
        t += dt_ms
    return patient, samples


def closed_form(pinsp, palv0, tau_ms, t_ms):
    return pinsp - (pinsp - palv0) * math.exp(-t_ms / tau_ms)


def test_inspiration_matches_exponential_at_tau_marks():
    rng = random.Random(7)
    for _ in range(10):
        r = rng.uniform(5, 20)
        c = rng.uniform(0.03, 0.08)
        while r * c < 0.25:
            r = rng.uniform(5, 20)
            c = rng.uniform(0.03, 0.08)
        patient = LungPatient(r, c, 5.0)
        circuit = VentCircuit(20.0, 5.0, i_valve=OPEN, o_valve=CLOSED)
        gap = 15.0
        for k in (1, 2, 5):
            target = k * patient.tau_ms
            p, _ = simulate_constant(patient, circuit, target)
            exact = closed_form(20.0, 5.0, patient.tau_ms, p.time_ms)
            assert abs(p.alveolar_pressure - exact) <= 0.01 * gap


def test_literature_example_tau_half_second():
    # R=10, C=0.05 -> tau = 0.5 s; Palv(tau) = 20 - 15/e = 14.48
    patient = LungPatient(10, 0.05, 5.0)
    circuit = VentCircuit(20.0, 5.0, i_valve=OPEN, o_valve=CLOSED)
    p, _ = simulate_constant(patient, circuit, 500)
    assert abs(p.alveolar_pressure - 14.48) < 0.15


def test_expiratory_flow_at_onset():
    patient = LungPatient(10, 0.05, 20.0)
    circuit = VentCircuit(20.0, 5.0, i_valve=CLOSED, o_valve=OPEN)
    _, sample = step_lung(patient, circuit, 10)
    assert sample.flow == pytest.approx((5.0 - 20.0) / 10.0)


def test_plateau_is_exactly_invariant():
    patient = LungPatient(10, 0.05, 17.3)
    circuit = VentCircuit(20.0, 5.0, i_valve=CLOSED, o_valve=CLOSED)
    p, samples = simulate_constant(patient, circuit, 500)
    assert p.alveolar_pressure == 17.3
    assert all(s.flow == 0.0 for s in samples)
    assert all(s.paw == 17.3 for s in samples)  # the gauge reads the plateau


def test_both_valves_open_raises():
    patient = LungPatient(10, 0.05, 5.0)
    circuit = VentCircuit(20.0, 5.0, i_valve=OPEN, o_valve=OPEN)
    with pytest.raises(BothValvesOpen):
        step_lung(patient, circuit, 10)


def test_dt_stability_guard():
    patient = LungPatient(5, 0.02, 5.0)  # tau = 100 ms
    circuit = VentCircuit(20.0, 5.0, i_valve=OPEN, o_valve=CLOSED)
    with pytest.raises(ConfigError):
        step_lung(patient, circuit, 50)


def test_passivity_bounds_palv():
    patient = LungPatient(8, 0.05, 12.0)
    lo, hi = 5.0, 20.0
    circuit = VentCircuit(hi, lo)
    rng = random.Random(3)
    for _ in range(2000):
        if rng.random() < 0.02:
            choice = rng.choice([(OPEN, CLOSED), (CLOSED, OPEN), (CLOSED, CLOSED)])
            circuit.i_valve, circuit.o_valve = choice
        patient, _ = step_lung(patient, circuit, 10)
        assert min(lo, 12.0) - 1e-9 <= patient.alveolar_pressure <= max(hi, 12.0) + 1e-9


def test_convergence_is_monotone_and_within_1_percent_at_5tau():
    patient = LungPatient(10, 0.05, 5.0)
    circuit = VentCircuit(20.0, 5.0, i_valve=OPEN, o_valve=CLOSED)
    gap0 = 15.0
    last_gap = gap0
    p = patient
    for _ in range(250):  # 2.5 s = 5 tau
        p, _ = step_lung(p, circuit, 10)
        gap = abs(20.0 - p.alveolar_pressure)
        assert gap <= last_gap + 1e-12
        last_gap = gap
    assert last_gap < 0.01 * gap0


def test_grid_refinement_changes_little():
    def palv_at(dt_ms):
        p = LungPatient(10, 0.05, 5.0)
        c = VentCircuit(20.0, 5.0, i_valve=OPEN, o_valve=CLOSED)
        steps = int(500 / dt_ms)
        for _ in range(steps):
            p, _ = step_lung(p, c, dt_ms)
        return p.alveolar_pressure

    # tau/20 = 25 ms here; halving dt moves Palv by well under 0.5 % of the gap
    assert abs(palv_at(20) - palv_at(10)) < 0.005 * 15.0


def test_effort_pulse_triggers_drop_event_once_per_expiration():
    patient = LungPatient(10, 0.05, 5.0,
                          effort=EffortProfile(2000, 2.1, duration_ms=200))
    circuit = VentCircuit(20.0, 5.0, i_valve=CLOSED, o_valve=OPEN, its=2.0)
    detector = EventDetector(circuit)
    events_per_expiration = 0
    p = patient
    for _ in range(800):  # 8 s within one expiration phase
        p, sample = step_lung(p, circuit, 10)
        if EVENT_DROP_PAW in detector.observe(sample, CLOSED, OPEN):
            events_per_expiration += 1
    assert events_per_expiration == 1  # latched until the phase changes


def test_no_events_at_constant_peep():
    patient = LungPatient(10, 0.05, 5.0)
    circuit = VentCircuit(20.0, 5.0, i_valve=CLOSED, o_valve=OPEN)
    history = []
    p = patient
    for _ in range(10):
        p, sample = step_lung(p, circuit, 10)
        history.append((sample, CLOSED, OPEN))
    assert detect_events(history, circuit) == set()


def test_detect_events_needs_history():
    circuit = VentCircuit(20.0, 5.0)
    with pytest.raises(ConfigError):
        detect_events([(LungSample(0, 5.0, 5.0, 0.0), CLOSED, OPEN)], circuit)


def test_flow_drop_event_fires_below_peak_fraction():
    patient = LungPatient(10, 0.05, 5.0)
    circuit = VentCircuit(20.0, 5.0, i_valve=OPEN, o_valve=CLOSED,
                          flow_peak_fraction=0.3)
    detector = EventDetector(circuit)
    fired_at = None
    p = patient
    peak = None
    for _ in range(300):
        p, sample = step_lung(p, circuit, 10)
        peak = max(peak or 0.0, sample.flow)
        if EVENT_FLOW_DROP in detector.observe(sample, OPEN, CLOSED):
            fired_at = sample
            break
    assert fired_at is not None
    assert fired_at.flow < 0.3 * peak
    # oracle: exponential flow decay crosses 0.3 x peak just after tau * ln(1/0.3)
    tau_ms = 500
    expected_ms = tau_ms * math.log(1 / 0.3)
    assert abs(fired_at.t_ms - expected_ms) <= 20


def test_profile_parsing_and_default_patient():
    patient, circuit = default_patient()
    assert patient.resistance == 10.0
    assert patient.compliance == 0.05
    assert circuit.pinsp == 20.0
    assert circuit.peep == 5.0
    with pytest.raises(ConfigError):
        parse_profile_text("resistance = 10.0\n")  # missing keys


def test_waveform_csv_shape():
    patient = LungPatient(10, 0.05, 5.0)
    circuit = VentCircuit(20.0, 5.0, i_valve=OPEN, o_valve=CLOSED)
    _, samples = simulate_constant(patient, circuit, 50)
    text = waveform_csv(samples)
    lines = text.strip().splitlines()
    assert lines[0] == "t,Paw,Palv,flow,events"
    assert len(lines) == 6
    assert lines[1].startswith("10,20.0000,")
