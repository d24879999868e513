// Wire types for the ground-station protocol (see ../docs/protocol.md).

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface TelemetryRecord {
  type: "telemetry";
  seq: number;
  node_id: string;
  ts_gps: number;
  position: Vec3;
  battery_fraction: number;
  counters: Record<string, number>;
  link_state: string;
  ooo?: boolean;
}

export interface CommandRecord {
  type: "command";
  seq: number;
  cmd_id: string;
  action: string;
  targets: string[];
  issued_by?: string;
  args?: Record<string, unknown>;
}

export type AckStatus = "accepted" | "rejected" | "completed";

export interface AckRecord {
  type: "ack";
  seq: number;
  cmd_id: string;
  node_id: string;
  status: AckStatus;
  detail?: string;
}

export interface MetaRecord {
  type: "meta";
  seq: number;
  [key: string]: unknown;
}

export type RunRecord = TelemetryRecord | CommandRecord | AckRecord | MetaRecord;

export interface HelloMessage {
  type: "hello";
  session_id: string;
  run_id: string;
}

export type StreamMessage = HelloMessage | RunRecord;

export interface SensorMarker {
  sensor_id: string;
  position: Vec3;
}
