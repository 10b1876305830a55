// Wire types for the session API (see docs/openapi.json in the repo root).

export interface LungSampleWire {
  tMs: number;
  paw: number;
  palv: number;
  flow: number;
  events: string[];
}

export interface SessionSampleWire {
  step: number;
  clockSecs: number;
  status: string;
  machine: Record<string, string | boolean>;
  monitored: Record<string, string | boolean | number>;
  lung: LungSampleWire;
  alarms: { apnea: boolean };
}

export interface SessionInfo {
  id: string;
  level: number;
  tickMs: number;
  status: string;
}

export interface CommandAck {
  queued: boolean;
  command: string;
  value: string | boolean;
  step: number;
}

// The nine operator inputs plus the three simulated patient events,
// exactly the monitored functions of the richest controller level.
export type ButtonId =
  | "startupEnded"
  | "selfTestPassed"
  | "startVentilation"
  | "stopRequested"
  | "respirationMode"
  | "cmdInPause"
  | "cmdExPause"
  | "cmdRm"
  | "dropPAW_ITS"
  | "flowDropPSV"
  | "pawGTMaxPinsp";
