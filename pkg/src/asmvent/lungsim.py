"""Single-compartment RC lung model and patient-side event detection.

The airway is an ideal pressure source selected by the valve pair
(inspiratory target while inspiring, PEEP while expiring), the lung a
series resistance R into a compliance C. Flow follows (Paw - Palv)/R and
the alveolar pressure integrates flow/C by explicit forward Euler; with
dt <= tau/10 (tau = R*C) the step error stays well inside the 1 %-of-gap
acceptance band checked against the closed-form exponential.

Spontaneous effort is a periodic impulse: at each effort onset the
magnitude is subtracted from Palv (the patient pulls air in), and for the
effort duration during expiration the measured airway pressure dips by
the same magnitude, which is what the trigger threshold sees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .errors import BothValvesOpen, ConfigError

OPEN = "OPEN"
CLOSED = "CLOSED"

EVENT_DROP_PAW = "dropPAW_ITS"
EVENT_FLOW_DROP = "flowDropPSV"


@dataclass(frozen=True)
class EffortProfile:
    period_ms: int
    magnitude: float  # cmH2O
    duration_ms: int = 200


@dataclass(frozen=True)
class LungPatient:
    resistance: float  # cmH2O / (L/s)
    compliance: float  # L / cmH2O
    alveolar_pressure: float  # cmH2O
    effort: Optional[EffortProfile] = None
    time_ms: int = 0

    def __post_init__(self):
        if self.resistance <= 0 or self.compliance <= 0:
            raise ConfigError("resistance and compliance must be positive")
        if not math.isfinite(self.alveolar_pressure):
            raise ConfigError("alveolar pressure must be finite")

    @property
    def tau_ms(self) -> float:
        return self.resistance * self.compliance * 1000.0


@dataclass
class VentCircuit:
    pinsp: float  # cmH2O
    peep: float  # cmH2O
    i_valve: str = CLOSED
    o_valve: str = OPEN
    its: float = 2.0  # inhale trigger sensitivity, cmH2O below PEEP
    flow_peak_fraction: float = 0.3

    def __post_init__(self):
        if not self.pinsp > self.peep >= 0:
            raise ConfigError("need Pinsp > PEEP >= 0")
        if not 0 < self.flow_peak_fraction < 1:
            raise ConfigError("flowPeakFraction must be in (0, 1)")


@dataclass(frozen=True)
class LungSample:
    t_ms: int
    paw: float
    palv: float
    flow: float  # L/s, positive into the lung
    events: Tuple[str, ...] = ()


def _in_effort_window(patient: LungPatient, t_ms: int) -> bool:
    # the first effort falls at t = period, not at rest
    e = patient.effort
    if e is None or e.period_ms <= 0:
        return False
    return t_ms >= e.period_ms and t_ms % e.period_ms < e.duration_ms


def step_lung(patient: LungPatient, circuit: VentCircuit,
              dt_ms: float) -> Tuple[LungPatient, LungSample]:
    """Advance the lung by dt under the circuit's current valve pair."""
    if dt_ms <= 0:
        raise ConfigError("dt must be positive")
    if dt_ms > patient.tau_ms / 10:
        raise ConfigError(
            f"dt={dt_ms} ms too coarse for tau={patient.tau_ms:.0f} ms; "
            "explicit integration needs dt <= tau/10")
    i_open = circuit.i_valve == OPEN
    o_open = circuit.o_valve == OPEN
    if i_open and o_open:
        raise BothValvesOpen("both valves open: controller safety violation")

    t_next = patient.time_ms + dt_ms
    palv = patient.alveolar_pressure
    e = patient.effort
    if e is not None and e.period_ms > 0:
        crossed = int(patient.time_ms) // e.period_ms != int(t_next) // e.period_ms
        if crossed:
            palv -= e.magnitude

    if not i_open and not o_open:
        # plateau: no flow, the gauge reads the alveolar pressure
        sample = LungSample(int(t_next), palv, palv, 0.0)
        return replace(patient, alveolar_pressure=palv, time_ms=int(t_next)), sample

    source = circuit.pinsp if i_open else circuit.peep
    flow = (source - palv) / patient.resistance
    palv_next = palv + flow * (dt_ms / 1000.0) / patient.compliance
    paw = source
    if not i_open and _in_effort_window(patient, int(t_next)):
        paw = source - (e.magnitude if e else 0.0)
    sample = LungSample(int(t_next), paw, palv_next, flow)
    return replace(patient, alveolar_pressure=palv_next, time_ms=int(t_next)), sample


class EventDetector:
    """Latched per-phase detection of trigger and flow-drop events."""

    def __init__(self, circuit: VentCircuit):
        self.circuit = circuit
        self._phase: Optional[str] = None
        self._peak_flow = 0.0
        self._drop_latched = False
        self._flow_latched = False

    def observe(self, sample: LungSample, i_valve: str, o_valve: str) -> Set[str]:
        phase = "insp" if i_valve == OPEN else ("exp" if o_valve == OPEN else "pause")
        if phase != self._phase:
            self._phase = phase
            self._peak_flow = 0.0
            self._drop_latched = False
            self._flow_latched = False
        events: Set[str] = set()
        if phase == "exp" and not self._drop_latched:
            if sample.paw < self.circuit.peep - self.circuit.its:
                events.add(EVENT_DROP_PAW)
                self._drop_latched = True
        if phase == "insp":
            if sample.flow > self._peak_flow:
                self._peak_flow = sample.flow
            elif (not self._flow_latched and self._peak_flow > 0
                    and sample.flow < self.circuit.flow_peak_fraction * self._peak_flow):
                events.add(EVENT_FLOW_DROP)
                self._flow_latched = True
        return events


def detect_events(history: Sequence[Tuple[LungSample, str, str]],
                  circuit: VentCircuit) -> Set[str]:
    """Events carried by the last sample of (sample, iValve, oValve) history."""
    if len(history) < 2:
        raise ConfigError("event detection needs at least one prior sample")
    detector = EventDetector(circuit)
    events: Set[str] = set()
    for sample, i_valve, o_valve in history:
        events = detector.observe(sample, i_valve, o_valve)
    return events


# -- profiles and export ----------------------------------------------------

def parse_profile_text(text: str, what: str = "profile") -> Tuple[LungPatient, VentCircuit]:
    from .models import parse_key_values
    pairs = parse_key_values(text, what)
    try:
        effort_period = int(pairs.get("effortPeriod", "0"))
        effort = None
        if effort_period > 0:
            effort = EffortProfile(
                period_ms=effort_period,
                magnitude=float(pairs.get("effortMagnitude", "0")),
                duration_ms=int(pairs.get("effortDuration", "200")),
            )
        peep = float(pairs["peep"])
        patient = LungPatient(
            resistance=float(pairs["resistance"]),
            compliance=float(pairs["compliance"]),
            alveolar_pressure=float(pairs.get("palv0", str(peep))),
            effort=effort,
        )
        circuit = VentCircuit(
            pinsp=float(pairs["pinsp"]),
            peep=peep,
            its=float(pairs.get("its", "2.0")),
            flow_peak_fraction=float(pairs.get("flowPeakFraction", "0.3")),
        )
    except KeyError as exc:
        raise ConfigError(f"{what}: missing key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    return patient, circuit


def default_patient() -> Tuple[LungPatient, VentCircuit]:
    from .models import asset_text
    return parse_profile_text(asset_text("profiles/adult_default.profile"))


def waveform_csv(samples: Sequence[LungSample]) -> str:
    lines = ["t,Paw,Palv,flow,events"]
    for s in samples:
        events = "|".join(sorted(s.events))
        lines.append(f"{s.t_ms},{s.paw:.4f},{s.palv:.4f},{s.flow:.4f},{events}")
    return "\n".join(lines) + "\n"
