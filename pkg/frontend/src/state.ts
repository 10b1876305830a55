// Panel state: a pure fold over received samples. Rendering reads this
// and nothing else, so every indicator is a function of the latest
// committed sample (no controller logic on the client).

import type { SessionSampleWire } from "./types.js";

export const WAVEFORM_WINDOW_MS = 30_000;

export interface WavePoint {
  tMs: number;
  value: number;
}

export interface PanelState {
  connection: "connecting" | "live" | "disconnected";
  latest: SessionSampleWire | null;
  paw: WavePoint[];
  flow: WavePoint[];
  triggerMarks: number[]; // tMs of dropPAW_ITS events in the window
}

export function initialPanelState(): PanelState {
  return { connection: "connecting", latest: null, paw: [], flow: [], triggerMarks: [] };
}

function trimmed(points: WavePoint[], now: number): WavePoint[] {
  const cutoff = now - WAVEFORM_WINDOW_MS;
  let start = 0;
  while (start < points.length && points[start].tMs < cutoff) {
    start += 1;
  }
  return start > 0 ? points.slice(start) : points;
}

export function applySample(state: PanelState, sample: SessionSampleWire): PanelState {
  // samples must never move the panel backwards
  if (state.latest !== null && sample.step < state.latest.step) {
    return state;
  }
  const tMs = sample.lung.tMs;
  const paw = trimmed([...state.paw, { tMs, value: sample.lung.paw }], tMs);
  const flow = trimmed([...state.flow, { tMs, value: sample.lung.flow }], tMs);
  const marks = state.triggerMarks.filter((t) => t >= tMs - WAVEFORM_WINDOW_MS);
  if (sample.lung.events.includes("dropPAW_ITS")) {
    marks.push(tMs);
  }
  return { connection: state.connection, latest: sample, paw, flow, triggerMarks: marks };
}

export function setConnection(
  state: PanelState,
  connection: PanelState["connection"],
): PanelState {
  return { ...state, connection };
}
