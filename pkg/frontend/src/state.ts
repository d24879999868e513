// Session state as a pure projection of the record stream. Nothing here
// invents vehicle state: every field traces back to a received record.

import type { RunRecord, Vec3 } from "./types.js";

export const STALE_AFTER_MS = 5000;

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface VehicleView {
  nodeId: string;
  position: Vec3;
  battery: number;
  counters: Record<string, number>;
  linkState: string;
  lastHeardMs: number;
}

export interface AckView {
  status: string;
  detail?: string;
}

export interface CommandView {
  cmdId: string;
  action: string;
  targets: string[];
  issuedBy?: string;
  acks: Map<string, AckView>;
}

export interface SessionView {
  connection: ConnectionState;
  runId: string | null;
  lastSeq: number;
  vehicles: Map<string, VehicleView>;
  commands: CommandView[];
}

export function newSessionView(): SessionView {
  return {
    connection: "connecting",
    runId: null,
    lastSeq: 0,
    vehicles: new Map(),
    commands: [],
  };
}

/**
 * Fold one record into the view. Returns false (and changes nothing) for
 * records already applied, which makes reconnect backfill idempotent.
 */
export function applyRecord(view: SessionView, record: RunRecord, nowMs: number): boolean {
  if (typeof record.seq !== "number" || record.seq <= view.lastSeq) {
    return false;
  }
  view.lastSeq = record.seq;
  switch (record.type) {
    case "telemetry": {
      view.vehicles.set(record.node_id, {
        nodeId: record.node_id,
        position: record.position,
        battery: record.battery_fraction,
        counters: record.counters,
        linkState: record.link_state,
        lastHeardMs: nowMs,
      });
      break;
    }
    case "command": {
      view.commands.push({
        cmdId: record.cmd_id,
        action: record.action,
        targets: record.targets,
        issuedBy: record.issued_by,
        acks: new Map(),
      });
      break;
    }
    case "ack": {
      const entry = view.commands.find((c) => c.cmdId === record.cmd_id);
      if (entry) {
        entry.acks.set(record.node_id, { status: record.status, detail: record.detail });
      }
      break;
    }
    default:
      // meta and future record kinds advance the cursor but render nothing
      break;
  }
  return true;
}

export function isStale(vehicle: VehicleView, nowMs: number): boolean {
  return nowMs - vehicle.lastHeardMs > STALE_AFTER_MS;
}

export function staleVehicles(view: SessionView, nowMs: number): string[] {
  return [...view.vehicles.values()]
    .filter((v) => isStale(v, nowMs))
    .map((v) => v.nodeId)
    .sort();
}
