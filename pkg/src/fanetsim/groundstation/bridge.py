"""In-process bridge between simulated vehicles and the ground station."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from ..scenario import ScenarioConfig
from ..simcore import US_PER_S, seconds
from ..world import Mission, Position, position_at
from .service import Ack, GroundStation


@dataclass
class _SimVehicle:
    vehicle_id: str
    mission: Mission
    t_us: int = 0
    mission_started_at_us: int = 0
    stopped: bool = False
    held: Position | None = None
    home: Position | None = None
    pending: list[dict] = field(default_factory=list)
    seen_cmds: set[str] = field(default_factory=set)
    counters: dict[str, int] = field(default_factory=dict)

    def position(self) -> Position:
        if self.stopped:
            return self.held if self.held is not None else self.mission.waypoints[0]
        return position_at(self.mission, self.t_us - self.mission_started_at_us)


class SimFleetBridge:
    """Drives scenario vehicles, feeding telemetry in and applying commands
    at telemetry-step boundaries (keeps runs deterministic for a fixed
    command schedule)."""

    def __init__(
        self,
        gs: GroundStation,
        cfg: ScenarioConfig,
        telemetry_interval_s: float = 1.0,
    ):
        self.gs = gs
        self.cfg = cfg
        self.interval_us = seconds(telemetry_interval_s)
        self._vehicles: dict[str, _SimVehicle] = {}
        self._stop_event = threading.Event()
        self._thread: threading.Thread | None = None
        for spec in cfg.drones:
            v = _SimVehicle(spec.drone_id, spec.mission, home=spec.mission.waypoints[0])
            self._vehicles[spec.drone_id] = v
            gs.bridge_attach(spec.drone_id, self._make_receiver(v))

    def _make_receiver(self, v: _SimVehicle):
        def receive(cmd: dict) -> None:
            # At-least-once forwarding: drop duplicates by cmd_id.
            if cmd["cmd_id"] in v.seen_cmds:
                return
            v.seen_cmds.add(cmd["cmd_id"])
            v.pending.append(cmd)

        return receive

    def vehicle_ids(self) -> list[str]:
        return sorted(self._vehicles)

    def step(self, dt_us: int | None = None) -> None:
        """Advance every vehicle one telemetry interval (an event boundary)."""
        dt = dt_us if dt_us is not None else self.interval_us
        for vid in sorted(self._vehicles):
            v = self._vehicles[vid]
            self._apply_pending(v)
            v.t_us += dt
            pos = v.position()
            v.counters["telemetry_sent"] = v.counters.get("telemetry_sent", 0) + 1
            self.gs.ingest_telemetry(
                {
                    "node_id": vid,
                    "ts_gps": v.t_us,
                    "position": {"x": pos.x, "y": pos.y, "z": pos.z},
                    "battery_fraction": max(0.0, 1.0 - v.t_us / (20 * 60 * US_PER_S)),
                    "counters": dict(v.counters),
                    "link_state": "stopped" if v.stopped else "mission",
                }
            )

    def _apply_pending(self, v: _SimVehicle) -> None:
        while v.pending:
            cmd = v.pending.pop(0)
            action = cmd["action"]
            if action == "stop":
                v.held = v.position()
                v.stopped = True
            elif action == "goto":
                wp = cmd.get("args", {}).get("waypoint", {})
                target = Position(wp.get("x", 0.0), wp.get("y", 0.0), wp.get("z", 10.0))
                v.mission = Mission([v.position(), target], v.mission.speed)
                v.mission_started_at_us = v.t_us
                v.stopped = False
            elif action == "return_home":
                v.mission = Mission([v.position(), v.home], v.mission.speed)
                v.mission_started_at_us = v.t_us
                v.stopped = False
            elif action == "start_experiment":
                v.stopped = False
            self.gs.post_ack(Ack(cmd["cmd_id"], v.vehicle_id, "completed", detail=action))

    # -- real-time driving for `serve --sim` --------------------------------

    def start(self) -> None:
        def loop():
            while not self._stop_event.wait(self.interval_us / US_PER_S):
                self.step()

        self._thread = threading.Thread(target=loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop_event.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    def detach(self) -> None:
        self.stop()
        for vid in self._vehicles:
            self.gs.bridge_detach(vid)
