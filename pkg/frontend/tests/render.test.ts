import { describe, expect, it } from "vitest";

import { buttonSpecs, renderModel, stripPath } from "../src/render.js";
import { applySample, initialPanelState, setConnection } from "../src/state.js";
import type { SessionSampleWire } from "../src/types.js";

function sampleWith(machine: Record<string, string | boolean>, apnea = false): SessionSampleWire {
  return {
    step: 7,
    clockSecs: 0.7,
    status: "running",
    machine,
    monitored: {},
    lung: { tMs: 700, paw: 20, palv: 10, flow: 1.2, events: [] },
    alarms: { apnea },
  };
}

describe("render model", () => {
  it("is a pure function of the latest sample", () => {
    let state = initialPanelState();
    state = setConnection(state, "live");
    state = applySample(state, sampleWith({
      state: "PCV_STATE", phase: "INSPIRATION", iValve: "OPEN", oValve: "CLOSED",
    }));
    const model = renderModel(state);
    expect(model.stateLabel).toBe("PCV / INSPIRATION");
    expect(model.iValveLed).toBe(true);
    expect(model.oValveLed).toBe(false);
    expect(model.apneaLed).toBe(false);
    expect(model.running).toBe(true);
    expect(model.connectionLabel).toBe("live");
  });

  it("shows the idle states without a phase", () => {
    let state = initialPanelState();
    state = applySample(state, sampleWith({
      state: "VENTILATIONOFF", phase: "EXPIRATION", iValve: "CLOSED", oValve: "OPEN",
    }));
    const model = renderModel(state);
    expect(model.stateLabel).toBe("VENTILATION OFF");
    expect(model.running).toBe(false);
    expect(model.oValveLed).toBe(true);
  });

  it("lights the apnea indicator from the alarms field", () => {
    let state = initialPanelState();
    state = applySample(state, sampleWith({
      state: "PCV_STATE", phase: "INSPIRATION", iValve: "OPEN", oValve: "CLOSED",
    }, true));
    expect(renderModel(state).apneaLed).toBe(true);
  });

  it("renders a placeholder before the first sample", () => {
    const model = renderModel(initialPanelState());
    expect(model.stateLabel).toBe("--");
    expect(model.connectionLabel).toBe("connecting");
  });
});

describe("buttons", () => {
  it("exposes all eleven operator inputs", () => {
    const specs = buttonSpecs("PCV");
    expect(specs).toHaveLength(11);
    const ids = specs.map((spec) => spec.id);
    expect(ids).toContain("dropPAW_ITS");
    expect(ids).toContain("pawGTMaxPinsp");
    expect(ids).toContain("cmdRm");
  });

  it("styles momentary commands differently from modal ones", () => {
    const byId = new Map(buttonSpecs("PSV").map((spec) => [spec.id, spec]));
    expect(byId.get("cmdInPause")?.momentary).toBe(true);
    expect(byId.get("stopRequested")?.momentary).toBe(true);
    expect(byId.get("respirationMode")?.momentary).toBe(false);
    expect(byId.get("startupEnded")?.momentary).toBe(false);
    expect(byId.get("respirationMode")?.label).toBe("Mode: PSV");
  });
});

describe("waveform strips", () => {
  it("scales points into the box with the newest sample at the right edge", () => {
    const points = [
      { tMs: 0, value: 5 },
      { tMs: 15_000, value: 12.5 },
      { tMs: 30_000, value: 20 },
    ];
    const path = stripPath(points, [30_000], 300, 100, 5, 20);
    expect(path.points[2].x).toBeCloseTo(300);
    expect(path.points[2].y).toBeCloseTo(0); // max pressure at the top
    expect(path.points[0].y).toBeCloseTo(100);
    expect(path.points[1].x).toBeCloseTo(150);
    expect(path.marks[0]).toBeCloseTo(300);
  });

  it("handles an empty buffer", () => {
    expect(stripPath([], [], 300, 100, 0, 1)).toEqual({ points: [], marks: [] });
  });
});
