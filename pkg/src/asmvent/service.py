"""Closed-loop sessions: controller + clock + lung, behind an HTTP API.

One writer thread (or the caller, in manual mode) advances a session
tick by tick: queued operator commands and the previous tick's lung
events become the monitored environment, the controller steps, and the
new valve outputs drive the lung for one tick of sub-steps. Committed
samples are immutable; any number of readers stream them in order.

Session time is simulated (tick k happens at k * tick), so a run is
fully reproducible from its log: replaying the logged monitored
environments through the interpreter and the lung model reproduces every
controlled value and waveform bit for bit.
"""
from __future__ import annotations

import itertools
import json
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Set, Tuple

from .errors import AsmError, UnknownSession
from .interpreter import initial_state, step
from .lungsim import (
    CLOSED,
    EventDetector,
    LungPatient,
    LungSample,
    OPEN,
    VentCircuit,
    default_patient,
    step_lung,
)
from .models import ControllerConfig, default_config, load
from .scenario import default_env
from .syntax import CLOCK_FUNCTION, Machine, Value

# Commands that auto-clear after being consumed by exactly one step.
MOMENTARY = {
    "startVentilation", "stopRequested", "cmdInPause", "cmdExPause", "cmdRm",
    "dropPAW_ITS", "flowDropPSV", "pawGTMaxPinsp",
}
MODAL = {"startupEnded", "selfTestPassed", "respirationMode"}


@dataclass
class SessionSample:
    step: int
    clock_secs: float
    machine: Dict[str, Value]
    monitored: Dict[str, Value]
    lung: LungSample
    apnea_alarm: bool
    status: str

    def to_json_dict(self) -> dict:
        return {
            "step": self.step,
            "clockSecs": self.clock_secs,
            "status": self.status,
            "machine": self.machine,
            "monitored": self.monitored,
            "lung": {
                "tMs": self.lung.t_ms,
                "paw": self.lung.paw,
                "palv": self.lung.palv,
                "flow": self.lung.flow,
                "events": sorted(self.lung.events),
            },
            "alarms": {"apnea": self.apnea_alarm},
        }


class Session:
    """Single closed-loop run; one writer, many readers."""

    _ids = itertools.count(1)

    def __init__(self, level: int = 3,
                 config: Optional[ControllerConfig] = None,
                 patient: Optional[LungPatient] = None,
                 circuit: Optional[VentCircuit] = None,
                 tick_ms: int = 100, lung_dt_ms: int = 10,
                 speed: float = 1.0, manual: bool = False):
        if tick_ms < lung_dt_ms or tick_ms % lung_dt_ms != 0:
            raise ValueError("tick must be a multiple of the lung dt")
        self.id = f"s{next(self._ids)}"
        self.level = level
        self.machine: Machine = load(level, config or default_config())
        if patient is None or circuit is None:
            default_p, default_c = default_patient()
            patient = patient or default_p
            circuit = circuit or default_c
        self.patient = patient
        self.circuit = circuit
        self.detector = EventDetector(circuit)
        self.tick_ms = tick_ms
        self.lung_dt_ms = lung_dt_ms
        self.speed = speed
        self.manual = manual
        self.status = "paused" if manual else "running"

        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._pending: List[Tuple[str, Value]] = []
        self._held = default_env(self.machine)
        self._momentary_armed: Set[str] = set()
        self._lung_events: Set[str] = set()
        self._state = initial_state(self.machine)
        self.samples: List[SessionSample] = []
        self._commit(self._initial_sample())
        self._thread: Optional[threading.Thread] = None
        if not manual:
            self._thread = threading.Thread(target=self._run_loop, daemon=True)
            self._thread.start()

    # -- writer side ------------------------------------------------------

    def _initial_sample(self) -> SessionSample:
        lung = LungSample(0, self.circuit.peep, self.patient.alveolar_pressure, 0.0)
        return SessionSample(
            step=0,
            clock_secs=0.0,
            machine=self._visible_state(),
            monitored={},
            lung=lung,
            apnea_alarm=bool(self._state.controlled.get("apneaBackupMode", False)),
            status=self.status,
        )

    def _visible_state(self) -> Dict[str, Value]:
        return {
            f.name: self._state.controlled[f.name]
            for f in self.machine.functions_of_kind("controlled")
            if not f.timer_indexed and f.name != "clockMillis"
        }

    def _commit(self, sample: SessionSample) -> None:
        with self._cond:
            self.samples.append(sample)
            self._cond.notify_all()

    def _next_env(self) -> Dict[str, Value]:
        with self._lock:
            pending, self._pending = self._pending, []
        for name in self._momentary_armed:
            self._held[name] = False
        self._momentary_armed.clear()
        for name, value in pending:
            self._held[name] = value
            if name in MOMENTARY and value is True:
                self._momentary_armed.add(name)
        env = dict(self._held)
        for event in self._lung_events:
            if event in env:
                env[event] = True
        return env

    def _tick(self) -> None:
        step_no = len(self.samples)  # sample 0 is the initial state
        env = self._next_env()
        if self.machine.uses_time:
            env[CLOCK_FUNCTION] = step_no * self.tick_ms / 1000.0
        self._state = step(self.machine, self._state, env)
        visible = self._visible_state()
        i_valve = str(visible.get("iValve", CLOSED))
        o_valve = str(visible.get("oValve", OPEN))
        self.circuit.i_valve = i_valve
        self.circuit.o_valve = o_valve
        events: Set[str] = set()
        sample = None
        for _ in range(self.tick_ms // self.lung_dt_ms):
            self.patient, sample = step_lung(self.patient, self.circuit,
                                             self.lung_dt_ms)
            events |= self.detector.observe(sample, i_valve, o_valve)
        self._lung_events = {e for e in events
                             if e in self.machine.functions}
        assert sample is not None
        lung = LungSample(sample.t_ms, sample.paw, sample.palv, sample.flow,
                          tuple(sorted(events)))
        env_out = dict(env)
        self._commit(SessionSample(
            step=step_no,
            clock_secs=step_no * self.tick_ms / 1000.0,
            machine=visible,
            monitored=env_out,
            lung=lung,
            apnea_alarm=bool(self._state.controlled.get("apneaBackupMode", False)),
            status=self.status,
        ))

    def _run_loop(self) -> None:
        next_deadline = time.monotonic()
        while self.status == "running":
            if self.speed > 0:
                next_deadline += self.tick_ms / 1000.0 / self.speed
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            if self.status != "running":
                break
            self._tick()

    # -- caller side --------------------------------------------------------

    def advance(self, n_steps: int = 1) -> int:
        """Manual stepping; the caller is the writer."""
        if not self.manual:
            raise AsmError("advance is only available on manual sessions")
        for _ in range(n_steps):
            self._tick()
        return len(self.samples) - 1

    def apply_command(self, name: str, value: Optional[Value] = None) -> dict:
        decl = self.machine.functions.get(name)
        if decl is None or decl.kind != "monitored" or name == CLOCK_FUNCTION:
            raise AsmError(f"'{name}' is not an operator input")
        if value is None:
            value = True
        with self._lock:
            self._pending.append((name, value))
            queued_at = len(self.samples) - 1
        return {"queued": True, "command": name, "value": value, "step": queued_at}

    def snapshot(self) -> SessionSample:
        with self._lock:
            return self.samples[-1]

    def stream(self, from_index: int = 0,
               heartbeat: Optional[float] = None) -> Iterator[Optional[SessionSample]]:
        """Samples in order, without gaps. With ``heartbeat`` set, yields
        None after that many idle seconds so transports can write a
        keep-alive (and notice closed connections)."""
        index = from_index
        while True:
            sample: Optional[SessionSample] = None
            idle = False
            with self._cond:
                deadline = None if heartbeat is None else time.monotonic() + heartbeat
                while index >= len(self.samples) and self.status != "stopped":
                    timeout = 0.5
                    if deadline is not None:
                        timeout = min(timeout, max(0.01, deadline - time.monotonic()))
                    self._cond.wait(timeout=timeout)
                    if (deadline is not None and time.monotonic() >= deadline
                            and index >= len(self.samples)):
                        idle = True
                        break
                if not idle:
                    if index >= len(self.samples):
                        return  # stopped and fully drained
                    sample = self.samples[index]
                    index += 1
            yield None if idle else sample

    def stop(self) -> None:
        with self._cond:
            self.status = "stopped"
            self._cond.notify_all()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    def export_log(self) -> str:
        with self._lock:
            samples = list(self.samples)
        return "\n".join(json.dumps(s.to_json_dict()) for s in samples) + "\n"


# -- log replay ---------------------------------------------------------------

def replay_log(log_text: str, level: int,
               config: Optional[ControllerConfig] = None,
               patient: Optional[LungPatient] = None,
               circuit: Optional[VentCircuit] = None,
               tick_ms: int = 100, lung_dt_ms: int = 10) -> bool:
    """Re-run interpreter + lung on the logged inputs; True iff bit-identical."""
    machine = load(level, config or default_config())
    if patient is None or circuit is None:
        dp, dc = default_patient()
        patient = patient or dp
        circuit = circuit or dc
    lines = [json.loads(line) for line in log_text.splitlines() if line.strip()]
    state = initial_state(machine)
    detector = EventDetector(circuit)
    for i, entry in enumerate(lines):
        if i == 0:
            continue
        env = dict(entry["monitored"])
        state = step(machine, state, env)
        visible = {
            f.name: state.controlled[f.name]
            for f in machine.functions_of_kind("controlled")
            if not f.timer_indexed and f.name != "clockMillis"
        }
        if visible != entry["machine"]:
            return False
        i_valve = str(visible.get("iValve", CLOSED))
        o_valve = str(visible.get("oValve", OPEN))
        circuit.i_valve = i_valve
        circuit.o_valve = o_valve
        events = set()
        sample = None
        for _ in range(tick_ms // lung_dt_ms):
            patient, sample = step_lung(patient, circuit, lung_dt_ms)
            events |= detector.observe(sample, i_valve, o_valve)
        lung = entry["lung"]
        if (sample.t_ms != lung["tMs"] or sample.paw != lung["paw"]
                or sample.palv != lung["palv"] or sample.flow != lung["flow"]
                or sorted(events) != lung["events"]):
            return False
        if entry["alarms"]["apnea"] != bool(
                state.controlled.get("apneaBackupMode", False)):
            return False
    return True


# -- HTTP API -----------------------------------------------------------------

try:  # request bodies; module level so the schema generator can resolve them
    from pydantic import BaseModel

    class CreateSessionBody(BaseModel):
        level: int = 3
        tickMs: int = 100
        speed: float = 1.0
        manual: bool = False

    class CommandBody(BaseModel):
        command: str
        value: Optional[bool | str] = None

    class AdvanceBody(BaseModel):
        steps: int = 1
except ImportError:  # pragma: no cover - pydantic ships with fastapi
    pass


def create_app(runs_dir: Optional[str] = None, panel_dir: Optional[str] = None):
    """FastAPI app exposing sessions; field names match docs/openapi.json.

    With ``panel_dir`` set, the operator panel is served at /panel from
    that directory (same origin as the API, so no CORS setup).
    """
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import PlainTextResponse, StreamingResponse

    app = FastAPI(title="asmvent ventilation sessions", version="0.1.0")
    if panel_dir:
        from starlette.staticfiles import StaticFiles
        app.mount("/panel", StaticFiles(directory=panel_dir, html=True),
                  name="panel")
    sessions: Dict[str, Session] = {}
    app.state.sessions = sessions

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session '{session_id}'")
        return session

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            session = Session(level=body.level, tick_ms=body.tickMs,
                              speed=body.speed, manual=body.manual)
        except (ValueError, AsmError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        sessions[session.id] = session
        return {"id": session.id, "level": session.level,
                "tickMs": session.tick_ms, "status": session.status}

    @app.post("/sessions/{session_id}/commands")
    def post_command(session_id: str, body: CommandBody):
        session = get_session(session_id)
        try:
            return session.apply_command(body.command, body.value)
        except AsmError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str, body: AdvanceBody):
        session = get_session(session_id)
        try:
            step_no = session.advance(body.steps)
        except AsmError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"step": step_no}

    @app.get("/sessions/{session_id}/snapshot")
    def snapshot(session_id: str):
        return get_session(session_id).snapshot().to_json_dict()

    @app.get("/sessions/{session_id}/log", response_class=PlainTextResponse)
    def log(session_id: str):
        return get_session(session_id).export_log()

    @app.get("/sessions/{session_id}/stream")
    def stream(session_id: str, fromStep: int = 0):
        session = get_session(session_id)

        def gen():
            for sample in session.stream(from_index=fromStep, heartbeat=1.0):
                if sample is None:
                    yield ": keepalive\n\n"
                else:
                    yield f"data: {json.dumps(sample.to_json_dict())}\n\n"

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.delete("/sessions/{session_id}")
    def delete(session_id: str):
        session = get_session(session_id)
        session.stop()
        if runs_dir is not None:
            import os
            os.makedirs(runs_dir, exist_ok=True)
            path = os.path.join(runs_dir, f"{session.id}.jsonl")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(session.export_log())
        del sessions[session_id]
        return {"stopped": True, "steps": len(session.samples) - 1}

    return app
