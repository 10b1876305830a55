import { describe, expect, it } from "vitest";

import { applySample, initialPanelState, setConnection, WAVEFORM_WINDOW_MS } from "../src/state.js";
import type { SessionSampleWire } from "../src/types.js";

function sample(step: number, overrides: Partial<SessionSampleWire> = {}): SessionSampleWire {
  return {
    step,
    clockSecs: step / 10,
    status: "running",
    machine: { state: "STARTUP", phase: "EXPIRATION", iValve: "CLOSED", oValve: "OPEN" },
    monitored: {},
    lung: { tMs: step * 100, paw: 5, palv: 5, flow: 0, events: [] },
    alarms: { apnea: false },
    ...overrides,
  };
}

describe("panel state fold", () => {
  it("keeps the latest sample and appends waveform points", () => {
    let state = initialPanelState();
    state = applySample(state, sample(1));
    state = applySample(state, sample(2, { lung: { tMs: 200, paw: 20, palv: 8, flow: 1.5, events: [] } }));
    expect(state.latest?.step).toBe(2);
    expect(state.paw.map((p) => p.value)).toEqual([5, 20]);
    expect(state.flow.map((p) => p.value)).toEqual([0, 1.5]);
  });

  it("never renders state older than what it has shown", () => {
    let state = initialPanelState();
    state = applySample(state, sample(5));
    const before = state;
    state = applySample(state, sample(3));
    expect(state).toBe(before);
  });

  it("trims the waveform to the 30 s window", () => {
    let state = initialPanelState();
    for (let step = 1; step <= 400; step += 1) {
      state = applySample(state, sample(step));
    }
    const tEnd = state.latest!.lung.tMs;
    expect(state.paw[0].tMs).toBeGreaterThanOrEqual(tEnd - WAVEFORM_WINDOW_MS);
    expect(state.paw.length).toBeLessThanOrEqual(301);
  });

  it("records trigger marks from sample events", () => {
    let state = initialPanelState();
    state = applySample(state, sample(1));
    state = applySample(state, sample(2, {
      lung: { tMs: 200, paw: 2.5, palv: 5, flow: 0, events: ["dropPAW_ITS"] },
    }));
    expect(state.triggerMarks).toEqual([200]);
  });

  it("tracks connection status separately from samples", () => {
    let state = initialPanelState();
    expect(state.connection).toBe("connecting");
    state = setConnection(state, "live");
    expect(state.connection).toBe("live");
    state = setConnection(state, "disconnected");
    state = applySample(state, sample(1));
    expect(state.connection).toBe("disconnected");
  });
});
