"""Ground-station core: run lifecycle, telemetry ingest, command dispatch, fan-out.

Transport-independent.  All mutations to the active run funnel through one
lock, so every subscriber and the store observe a single total order.
"""

from __future__ import annotations

import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .store import RunStore, UnknownRun


class NoActiveRun(Exception):
    pass


class MalformedMessage(Exception):
    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


class NoTargetsResolved(Exception):
    pass


class DuplicateVehicleId(Exception):
    pass


class VehicleUnreachable(Exception):
    pass


@dataclass
class Ack:
    cmd_id: str
    node_id: str
    status: str  # accepted | rejected | completed
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "type": "ack",
            "cmd_id": self.cmd_id,
            "node_id": self.node_id,
            "status": self.status,
            "detail": self.detail,
        }


@dataclass
class Subscription:
    session_id: str
    q: "queue.Queue[dict]" = field(default_factory=queue.Queue)


class GroundStation:
    def __init__(self, runs_dir: str | Path):
        self.runs_dir = Path(runs_dir)
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._stores: dict[str, RunStore] = {}
        self._active_run: str | None = None
        self._subs: dict[str, Subscription] = {}
        # vehicle id -> callable receiving command dicts
        self._bridges: dict[str, Callable[[dict], None]] = {}
        self._last_ts: dict[str, int] = {}

    # -- runs ---------------------------------------------------------------

    def create_run(self, metadata: dict | None = None, run_id: str | None = None) -> str:
        with self._lock:
            run_id = run_id or time.strftime("run-%Y%m%d-%H%M%S-") + uuid.uuid4().hex[:6]
            self._stores[run_id] = RunStore(self.runs_dir, run_id, metadata or {})
            self._active_run = run_id
            self._last_ts = {}
            return run_id

    @property
    def active_run(self) -> str | None:
        return self._active_run

    def store(self, run_id: str | None = None) -> RunStore:
        rid = run_id or self._active_run
        if rid is None:
            raise NoActiveRun("no active run")
        if rid not in self._stores:
            path = self.runs_dir / f"{rid}.jsonl"
            if not path.exists():
                raise UnknownRun(rid)
            self._stores[rid] = RunStore(self.runs_dir, rid)
        return self._stores[rid]

    def close(self) -> None:
        with self._lock:
            for store in self._stores.values():
                store.close()
            self._stores.clear()

    # -- sessions -----------------------------------------------------------

    def subscribe(self, session_id: str | None = None) -> Subscription:
        sub = Subscription(session_id or uuid.uuid4().hex[:8])
        with self._lock:
            self._subs[sub.session_id] = sub
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            self._subs.pop(sub.session_id, None)

    def _fan_out(self, record: dict) -> None:
        # Caller holds the lock; arrival order is the fan-out order.
        for sub in self._subs.values():
            sub.q.put(record)

    # -- telemetry ----------------------------------------------------------

    def ingest_telemetry(self, msg: dict) -> int:
        self._validate_telemetry(msg)
        with self._lock:
            if self._active_run is None:
                raise NoActiveRun("no active run")
            node = msg["node_id"]
            ts = msg["ts_gps"]
            record = {"type": "telemetry", **msg}
            if node in self._last_ts and ts < self._last_ts[node]:
                record["ooo"] = True  # out-of-order timestamp, kept but flagged
            self._last_ts[node] = max(ts, self._last_ts.get(node, ts))
            seq = self.store().append(record)
            self._fan_out({**record, "seq": seq})
            return seq

    @staticmethod
    def _validate_telemetry(msg: dict) -> None:
        for key in ("node_id", "ts_gps", "position"):
            if key not in msg:
                raise MalformedMessage(key, "missing required field")
        battery = msg.get("battery_fraction", 1.0)
        if not 0.0 <= battery <= 1.0:
            raise MalformedMessage("battery_fraction", f"{battery} outside [0, 1]")
        pos = msg["position"]
        if not all(k in pos for k in ("x", "y", "z")):
            raise MalformedMessage("position", "needs x, y, z")

    # -- commands -----------------------------------------------------------

    def dispatch_command(self, cmd: dict) -> list[Ack]:
        action = cmd.get("action")
        if not action:
            raise MalformedMessage("action", "missing required field")
        targets = cmd.get("targets", "all")
        with self._lock:
            if self._active_run is None:
                raise NoActiveRun("no active run")
            if targets == "all" or targets == ["all"]:
                resolved = sorted(self._bridges)
            else:
                resolved = [t for t in targets if t in self._bridges]
            if not resolved:
                raise NoTargetsResolved(f"no connected vehicle matches {targets!r}")
            cmd_id = cmd.get("cmd_id") or uuid.uuid4().hex[:12]
            record = {
                "type": "command",
                "cmd_id": cmd_id,
                "action": action,
                "targets": resolved,
                "issued_by": cmd.get("issued_by", ""),
                "args": cmd.get("args", {}),
            }
            # Persist before any forward: the record survives a forward crash.
            seq = self.store().append(record)
            self._fan_out({**record, "seq": seq})
            acks = []
            for node in resolved:
                try:
                    self._bridges[node]({**record})
                    ack = Ack(cmd_id, node, "accepted")
                except Exception as exc:  # forward failure: rejected, but persisted
                    ack = Ack(cmd_id, node, "rejected", detail=str(exc))
                aseq = self.store().append(ack.to_dict())
                self._fan_out({**ack.to_dict(), "seq": aseq})
                acks.append(ack)
            return acks

    def post_ack(self, ack: Ack) -> int:
        """Completion acks arriving later from vehicles."""
        with self._lock:
            if self._active_run is None:
                raise NoActiveRun("no active run")
            seq = self.store().append(ack.to_dict())
            self._fan_out({**ack.to_dict(), "seq": seq})
            return seq

    # -- queries ------------------------------------------------------------

    def query_run(
        self,
        run_id: str,
        after: int = 0,
        limit: int = 100,
        node_ids: set[str] | None = None,
        kinds: set[str] | None = None,
        time_range_us: tuple[int, int] | None = None,
    ) -> list[dict]:
        return self.store(run_id).records(
            after=after,
            limit=limit,
            node_ids=node_ids,
            kinds=kinds,
            time_range_us=time_range_us,
        )

    # -- bridges ------------------------------------------------------------

    def bridge_attach(self, vehicle_id: str, send: Callable[[dict], None]) -> None:
        with self._lock:
            if vehicle_id in self._bridges:
                raise DuplicateVehicleId(vehicle_id)
            self._bridges[vehicle_id] = send

    def bridge_detach(self, vehicle_id: str) -> None:
        with self._lock:
            self._bridges.pop(vehicle_id, None)

    def vehicles(self) -> list[str]:
        with self._lock:
            return sorted(self._bridges)
