// Render model: pure projection from panel state to what the widgets
// show. The DOM writer below is the only impure part, which keeps the
// interesting logic testable without a browser.

import type { PanelState, WavePoint } from "./state.js";
import type { ButtonId } from "./types.js";

const STATE_LABELS: Record<string, string> = {
  STARTUP: "STARTUP",
  SELFTEST: "SELF-TEST",
  VENTILATIONOFF: "VENTILATION OFF",
  PCV_STATE: "PCV",
  PSV_STATE: "PSV",
};

export interface RenderModel {
  stateLabel: string; // the LCD line: mode plus phase when ventilating
  clockLabel: string;
  connectionLabel: string;
  iValveLed: boolean;
  oValveLed: boolean;
  apneaLed: boolean;
  running: boolean;
}

export function renderModel(state: PanelState): RenderModel {
  const sample = state.latest;
  if (sample === null) {
    return {
      stateLabel: "--",
      clockLabel: "",
      connectionLabel: state.connection,
      iValveLed: false,
      oValveLed: false,
      apneaLed: false,
      running: false,
    };
  }
  const machineState = String(sample.machine["state"] ?? "--");
  const running = machineState === "PCV_STATE" || machineState === "PSV_STATE";
  let label = STATE_LABELS[machineState] ?? machineState;
  if (running && sample.machine["phase"] !== undefined) {
    label = `${label} / ${String(sample.machine["phase"])}`;
  }
  return {
    stateLabel: label,
    clockLabel: `${sample.clockSecs.toFixed(1)} s`,
    connectionLabel: state.connection,
    iValveLed: sample.machine["iValve"] === "OPEN",
    oValveLed: sample.machine["oValve"] === "OPEN",
    apneaLed: sample.alarms.apnea,
    running,
  };
}

export interface ButtonSpec {
  id: ButtonId;
  label: string;
  momentary: boolean; // auto-clearing commands get the pulse styling
  value?: string | boolean;
}

export function buttonSpecs(mode: "PCV" | "PSV"): ButtonSpec[] {
  return [
    { id: "startupEnded", label: "Startup Done", momentary: false },
    { id: "selfTestPassed", label: "Self-Test Pass", momentary: false },
    { id: "startVentilation", label: "Start Ventilation", momentary: true },
    { id: "stopRequested", label: "Stop", momentary: true },
    { id: "respirationMode", label: `Mode: ${mode}`, momentary: false, value: mode },
    { id: "cmdInPause", label: "Insp Pause", momentary: true },
    { id: "cmdExPause", label: "Exp Pause", momentary: true },
    { id: "cmdRm", label: "Recruitment", momentary: true },
    { id: "dropPAW_ITS", label: "Trigger Breath", momentary: true },
    { id: "flowDropPSV", label: "Flow Drop", momentary: true },
    { id: "pawGTMaxPinsp", label: "Overpressure", momentary: true },
  ];
}

export interface StripPath {
  points: Array<{ x: number; y: number }>;
  marks: number[]; // x positions of trigger markers
}

/** Scale a waveform into a width x height box over the 30 s window. */
export function stripPath(
  points: WavePoint[],
  marks: number[],
  width: number,
  height: number,
  lo: number,
  hi: number,
  windowMs = 30_000,
): StripPath {
  if (points.length === 0) {
    return { points: [], marks: [] };
  }
  const tEnd = points[points.length - 1].tMs;
  const t0 = tEnd - windowMs;
  const x = (t: number) => ((t - t0) / windowMs) * width;
  const y = (v: number) => height - ((v - lo) / (hi - lo)) * height;
  return {
    points: points.map((p) => ({ x: x(p.tMs), y: y(p.value) })),
    marks: marks.map(x),
  };
}

// -- DOM binding -------------------------------------------------------------

export function paintPanel(root: Document, model: RenderModel): void {
  const text = (id: string, value: string) => {
    const node = root.getElementById(id);
    if (node) {
      node.textContent = value;
    }
  };
  const led = (id: string, on: boolean) => {
    const node = root.getElementById(id);
    if (node) {
      node.classList.toggle("on", on);
    }
  };
  text("state-label", model.stateLabel);
  text("clock-label", model.clockLabel);
  text("connection", model.connectionLabel);
  const banner = root.getElementById("banner");
  if (banner) {
    banner.classList.toggle("visible", model.connectionLabel === "disconnected");
  }
  led("led-ivalve", model.iValveLed);
  led("led-ovalve", model.oValveLed);
  led("led-apnea", model.apneaLed);
}

export function paintStrip(
  canvas: HTMLCanvasElement,
  points: WavePoint[],
  marks: number[],
  lo: number,
  hi: number,
  color: string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const path = stripPath(points, marks, width, height, lo, hi);
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  path.points.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
  ctx.stroke();
  ctx.strokeStyle = "#e0b020";
  for (const x of path.marks) {
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, height);
    ctx.stroke();
  }
}
