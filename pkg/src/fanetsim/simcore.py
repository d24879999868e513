"""Deterministic discrete-event engine: clock, queue, seeded RNG streams, traces."""

from __future__ import annotations

import hashlib
import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable

US_PER_S = 1_000_000


def seconds(s: float) -> int:
    """Convert seconds to the integer-microsecond time base."""
    return round(s * US_PER_S)


class SchedulingInPast(Exception):
    pass


@dataclass(frozen=True)
class Event:
    id: int
    time_us: int
    node_id: str
    kind: str
    payload: Any = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "time_us": self.time_us,
                "node_id": self.node_id,
                "kind": self.kind,
                "payload": self.payload,
            },
            sort_keys=True,
        )


def _splitmix64(x: int) -> int:
    # Stable 64-bit mixer; keeps per-node streams decorrelated for any seed.
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


class RngStream:
    """Deterministic per-node random stream derived from (master seed, stream id)."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = seed
        self.stream_id = stream_id
        self._rng = random.Random(_splitmix64(_splitmix64(seed) ^ stream_id))

    def next_uniform(self) -> float:
        return self._rng.random()

    def next_int(self, lo: int, hi: int) -> int:
        return self._rng.randint(lo, hi)


@dataclass
class EventTrace:
    events: list[Event] = field(default_factory=list)
    end_time_us: int = 0
    seed: int = 0
    scenario_hash: str = ""

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()


Handler = Callable[["Simulator", Event], None]


class Simulator:
    """Single-threaded event loop; replays bit-identically for a given seed."""

    def __init__(self, master_seed: int = 0, scenario_hash: str = ""):
        self.master_seed = master_seed
        self.clock_us = 0
        self._next_id = 1
        self._heap: list[tuple[int, int, Event]] = []
        self._handlers: dict[str, Handler] = {}
        self._streams: dict[int, RngStream] = {}
        self.trace = EventTrace(seed=master_seed, scenario_hash=scenario_hash)

    def rng(self, stream_id: int) -> RngStream:
        if stream_id not in self._streams:
            self._streams[stream_id] = RngStream(self.master_seed, stream_id)
        return self._streams[stream_id]

    def on(self, kind: str, handler: Handler) -> None:
        self._handlers[kind] = handler

    def schedule(self, time_us: int, node_id: str, kind: str, payload: Any = None) -> int:
        if time_us < self.clock_us:
            raise SchedulingInPast(
                f"event at {time_us}us is before clock {self.clock_us}us"
            )
        ev = Event(self._next_id, time_us, node_id, kind, payload)
        self._next_id += 1
        heapq.heappush(self._heap, (ev.time_us, ev.id, ev))
        return ev.id

    @property
    def queue_size(self) -> int:
        return len(self._heap)

    def run_until(self, t_end_us: int) -> EventTrace:
        if t_end_us < self.clock_us:
            raise SchedulingInPast(f"t_end {t_end_us}us is before clock {self.clock_us}us")
        while self._heap and self._heap[0][0] <= t_end_us:
            _, _, ev = heapq.heappop(self._heap)
            self.clock_us = ev.time_us
            self.trace.events.append(ev)
            handler = self._handlers.get(ev.kind)
            if handler is not None:
                handler(self, ev)
        self.clock_us = t_end_us
        self.trace.end_time_us = t_end_us
        return self.trace
