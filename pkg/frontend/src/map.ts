// Planar field map: coordinates are simulator meters, origin bottom-left.

import { isStale, type SessionView } from "./state.js";
import type { SensorMarker } from "./types.js";

export interface FieldExtent {
  width: number;
  height: number;
}

export const DEFAULT_FIELD: FieldExtent = { width: 316.2, height: 316.2 };
const PAD = 24;

export class FieldMap {
  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly field: FieldExtent = DEFAULT_FIELD,
    private sensors: SensorMarker[] = [],
  ) {}

  setSensors(sensors: SensorMarker[]): void {
    this.sensors = sensors;
  }

  private toPx(x: number, y: number): [number, number] {
    const sx = (this.canvas.width - 2 * PAD) / this.field.width;
    const sy = (this.canvas.height - 2 * PAD) / this.field.height;
    return [PAD + x * sx, this.canvas.height - PAD - y * sy];
  }

  render(view: SessionView, nowMs: number): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);

    ctx.strokeStyle = "#888";
    const [ox, oy] = this.toPx(0, this.field.height);
    const [fx, fy] = this.toPx(this.field.width, 0);
    ctx.strokeRect(ox, oy, fx - ox, fy - oy);

    ctx.fillStyle = "#2a7";
    for (const s of this.sensors) {
      const [px, py] = this.toPx(s.position.x, s.position.y);
      ctx.fillRect(px - 4, py - 4, 8, 8);
      ctx.fillText(s.sensor_id, px + 6, py - 6);
    }

    for (const v of view.vehicles.values()) {
      const stale = isStale(v, nowMs);
      const [px, py] = this.toPx(v.position.x, v.position.y);
      ctx.beginPath();
      ctx.arc(px, py, 7, 0, 2 * Math.PI);
      ctx.fillStyle = stale ? "#fff" : "#06c";
      ctx.fill();
      ctx.strokeStyle = stale ? "#e60" : "#06c";
      ctx.stroke();
      ctx.fillStyle = "#000";
      const tag = stale ? `${v.nodeId} (stale)` : v.nodeId;
      ctx.fillText(`${tag} z=${v.position.z.toFixed(0)}m`, px + 10, py + 4);
    }

    if (view.connection !== "connected") {
      ctx.fillStyle = "rgba(200, 40, 40, 0.85)";
      ctx.fillRect(0, 0, this.canvas.width, 26);
      ctx.fillStyle = "#fff";
      ctx.fillText(
        view.connection === "connecting" ? "connecting…" : "disconnected — reconnecting…",
        10,
        17,
      );
    }
  }
}
