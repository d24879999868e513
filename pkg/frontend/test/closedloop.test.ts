// Closed-loop test against a live service with a simulated 4-drone fleet.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GsClient } from "../src/client.js";

const FIXTURE = fileURLToPath(new URL("./fixtures/fleet4.json", import.meta.url));
const FLEET = ["drone1", "drone2", "drone3", "drone4"];

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolve(port));
    });
    srv.on("error", reject);
  });
}

async function until(cond: () => boolean, ms = 30000, step = 100): Promise<void> {
  const deadline = Date.now() + ms;
  while (!cond()) {
    if (Date.now() > deadline) throw new Error("condition not met in time");
    await new Promise((r) => setTimeout(r, step));
  }
}

function makeClient(baseUrl: string): GsClient {
  return new GsClient({
    baseUrl,
    wsFactory: (url) => new WebSocket(url) as never,
    reconnectMs: 200,
  });
}

describe("operator console against serve --sim", () => {
  let server: ChildProcess;
  let baseUrl: string;
  let runsDir: string;
  const clients: GsClient[] = [];

  beforeAll(async () => {
    const port = await freePort();
    baseUrl = `http://127.0.0.1:${port}`;
    runsDir = mkdtempSync(join(tmpdir(), "gsui-runs-"));
    server = spawn(
      "python3",
      ["-m", "fanetsim.cli", "serve", "--port", String(port),
       "--runs-dir", runsDir, "--sim", FIXTURE],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    server.stderr!.on("data", () => {});
    // wait for the service to accept requests
    const deadline = Date.now() + 30000;
    for (;;) {
      try {
        const resp = await fetch(`${baseUrl}/vehicles`);
        if (resp.ok) break;
      } catch {
        /* not up yet */
      }
      if (Date.now() > deadline) throw new Error("service did not start");
      await new Promise((r) => setTimeout(r, 200));
    }
  });

  afterAll(async () => {
    for (const c of clients) c.close();
    server.kill("SIGTERM");
    await new Promise((r) => setTimeout(r, 500));
    server.kill("SIGKILL");
    rmSync(runsDir, { recursive: true, force: true });
  });

  it("shows 4 moving drones, stops them all, and both sessions agree", async () => {
    const session1 = makeClient(baseUrl);
    const session2 = makeClient(baseUrl);
    clients.push(session1, session2);
    session1.connect();
    session2.connect();

    // 4 vehicles appear on both sessions' rosters
    await until(() => session1.view.vehicles.size === 4 && session2.view.vehicles.size === 4);
    expect([...session1.view.vehicles.keys()].sort()).toEqual(FLEET);

    // markers move: every vehicle's position changes between observations
    const before = new Map(
      [...session1.view.vehicles.values()].map((v) => [v.nodeId, { ...v.position }]),
    );
    const seqBefore = session1.view.lastSeq;
    await until(() => session1.view.lastSeq >= seqBefore + 8);
    for (const id of FLEET) {
      const was = before.get(id)!;
      const now = session1.view.vehicles.get(id)!.position;
      expect(now.x !== was.x || now.y !== was.y || now.z !== was.z).toBe(true);
    }

    // stop-to-all from session 1: one synchronous ack per vehicle
    const acks = await session1.sendCommand("stop", "all");
    expect(acks).toHaveLength(4);
    expect(acks.map((a) => a.node_id).sort()).toEqual(FLEET);
    expect(acks.every((a) => a.status === "accepted")).toBe(true);

    // the command renders in both sessions with one ack per vehicle
    await until(() =>
      [session1, session2].every((s) => {
        const cmd = s.view.commands.find((c) => c.action === "stop");
        return cmd !== undefined && FLEET.every((id) => cmd.acks.has(id));
      }),
    );
    const h1 = session1.view.commands.map((c) => c.cmdId);
    const h2 = session2.view.commands.map((c) => c.cmdId);
    expect(h2).toEqual(h1);

    // vehicles hold position once the stop is applied
    await until(() =>
      [...session1.view.vehicles.values()].every((v) => v.linkState === "stopped"),
    );
  });

  it("rebuilds state from backfill on a fresh session without duplicates", async () => {
    const late = makeClient(baseUrl);
    clients.push(late);
    late.connect();
    await until(() => late.view.vehicles.size === 4 && late.view.commands.length > 0);
    // history matches what an established session accumulated live
    const first = clients[0];
    expect(late.view.commands.map((c) => c.cmdId)).toEqual(
      first.view.commands.map((c) => c.cmdId),
    );
    const stop = late.view.commands.find((c) => c.action === "stop")!;
    expect([...stop.acks.keys()].sort()).toEqual(FLEET);
  });
});
