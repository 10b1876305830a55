// Panel wiring: create (or attach to) a session, subscribe to the
// stream, send one command per button press.

import { connect, createSession, sendCommand } from "./client.js";
import { applySample, initialPanelState, setConnection } from "./state.js";
import { buttonSpecs, paintPanel, paintStrip, renderModel } from "./render.js";

const base = ""; // same origin as the service

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  let sessionId = params.get("session");
  if (!sessionId) {
    const info = await createSession(base, { level: 3, tickMs: 100, speed: 1.0 });
    sessionId = info.id;
  }

  let state = initialPanelState();
  let mode: "PCV" | "PSV" = "PCV";

  const pawCanvas = document.getElementById("paw-strip") as HTMLCanvasElement;
  const flowCanvas = document.getElementById("flow-strip") as HTMLCanvasElement;

  const repaint = () => {
    paintPanel(document, renderModel(state));
    if (pawCanvas) {
      paintStrip(pawCanvas, state.paw, state.triggerMarks, 0, 25, "#4ec9b0");
    }
    if (flowCanvas) {
      paintStrip(flowCanvas, state.flow, [], -2, 2, "#569cd6");
    }
  };

  const buttonsHost = document.getElementById("buttons");
  const renderButtons = () => {
    if (!buttonsHost) {
      return;
    }
    buttonsHost.innerHTML = "";
    for (const spec of buttonSpecs(mode)) {
      const button = document.createElement("button");
      button.textContent = spec.label;
      button.className = spec.momentary ? "momentary" : "modal";
      button.addEventListener("click", () => {
        if (spec.id === "respirationMode") {
          mode = mode === "PCV" ? "PSV" : "PCV";
          renderButtons();
          void sendCommand(base, sessionId!, "respirationMode", mode);
        } else {
          void sendCommand(base, sessionId!, spec.id, spec.value ?? true);
        }
      });
      buttonsHost.appendChild(button);
    }
  };
  renderButtons();

  connect(
    base,
    sessionId,
    (sample) => {
      state = applySample(state, sample);
      repaint();
    },
    (status) => {
      state = setConnection(state, status);
      repaint();
    },
  );
}

void start();
