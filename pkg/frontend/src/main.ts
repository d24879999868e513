import { GsClient } from "./client.js";
import { DEFAULT_FIELD, FieldMap } from "./map.js";
import { CommandPanel } from "./panel.js";
import type { SensorMarker } from "./types.js";

const canvas = document.querySelector<HTMLCanvasElement>("#map")!;
const panelRoot = document.querySelector<HTMLElement>("#panel")!;

const map = new FieldMap(canvas, DEFAULT_FIELD);
const client = new GsClient({
  baseUrl: window.location.origin,
  onChange: (view) => {
    map.render(view, Date.now());
    panel.render(view);
  },
});
const panel = new CommandPanel(panelRoot, client);

// Sensor markers come from a scenario file served next to the UI, when
// the deployment provides one; the service itself only knows vehicles.
fetch("./scenario.json")
  .then((r) => (r.ok ? r.json() : null))
  .then((scenario) => {
    if (!scenario?.layout?.sensors) return;
    const sensors: SensorMarker[] = scenario.layout.sensors.map(
      (s: { id: string; x: number; y: number }) => ({
        sensor_id: s.id,
        position: { x: s.x, y: s.y, z: 0 },
      }),
    );
    map.setSensors(sensors);
  })
  .catch(() => {});

client.connect();
// periodic repaint so stale flags appear even while the stream is silent
setInterval(() => {
  map.render(client.view, Date.now());
  panel.render(client.view);
}, 1000);
