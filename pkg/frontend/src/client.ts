// HTTP/stream client for the session API. The stream endpoint is
// server-sent events; it is parsed by hand over fetch so the same code
// runs in browsers and in node-based tests.

import type { CommandAck, SessionInfo, SessionSampleWire } from "./types.js";

export interface CreateOptions {
  level?: number;
  tickMs?: number;
  speed?: number;
  manual?: boolean;
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    throw new Error(`HTTP ${response.status}: ${await response.text()}`);
  }
  return (await response.json()) as T;
}

export async function createSession(
  base: string,
  options: CreateOptions = {},
): Promise<SessionInfo> {
  const response = await fetch(`${base}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(options),
  });
  return asJson<SessionInfo>(response);
}

export async function sendCommand(
  base: string,
  sessionId: string,
  command: string,
  value?: string | boolean,
): Promise<CommandAck> {
  const response = await fetch(`${base}/sessions/${sessionId}/commands`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(value === undefined ? { command } : { command, value }),
  });
  return asJson<CommandAck>(response);
}

export async function getSnapshot(
  base: string,
  sessionId: string,
): Promise<SessionSampleWire> {
  return asJson(await fetch(`${base}/sessions/${sessionId}/snapshot`));
}

export async function deleteSession(base: string, sessionId: string): Promise<void> {
  await fetch(`${base}/sessions/${sessionId}`, { method: "DELETE" });
}

/** Yield stream samples in order, starting at fromStep. */
export async function* streamSamples(
  base: string,
  sessionId: string,
  fromStep = 0,
  signal?: AbortSignal,
): AsyncGenerator<SessionSampleWire> {
  const response = await fetch(
    `${base}/sessions/${sessionId}/stream?fromStep=${fromStep}`,
    { signal },
  );
  if (!response.ok || response.body === null) {
    throw new Error(`stream failed: HTTP ${response.status}`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        return;
      }
      buffer += decoder.decode(value, { stream: true });
      let boundary;
      while ((boundary = buffer.indexOf("\n\n")) >= 0) {
        const chunk = buffer.slice(0, boundary);
        buffer = buffer.slice(boundary + 2);
        for (const line of chunk.split("\n")) {
          if (line.startsWith("data: ")) {
            yield JSON.parse(line.slice(6)) as SessionSampleWire;
          }
          // lines starting with ':' are keep-alives
        }
      }
    }
  } finally {
    reader.releaseLock();
  }
}

export interface Connection {
  stop(): void;
}

/**
 * Subscribe to a session with automatic reconnection. On reconnect the
 * subscription resumes from the latest snapshot, so the panel never
 * renders stale state for long.
 */
export function connect(
  base: string,
  sessionId: string,
  onSample: (sample: SessionSampleWire) => void,
  onStatus: (status: "live" | "disconnected") => void,
  backoffMs = 500,
): Connection {
  let stopped = false;
  let controller = new AbortController();

  const pump = async () => {
    let fromStep = 0;
    while (!stopped) {
      try {
        for await (const sample of streamSamples(base, sessionId, fromStep, controller.signal)) {
          onStatus("live");
          onSample(sample);
          fromStep = sample.step + 1;
        }
        return; // clean end: session stopped
      } catch (err) {
        if (stopped) {
          return;
        }
        onStatus("disconnected");
        await new Promise((resolve) => setTimeout(resolve, backoffMs));
        try {
          const snapshot = await getSnapshot(base, sessionId);
          onSample(snapshot);
          fromStep = snapshot.step + 1;
        } catch {
          // still down; retry the loop
        }
      }
    }
  };
  void pump();
  return {
    stop() {
      stopped = true;
      controller.abort();
    },
  };
}
