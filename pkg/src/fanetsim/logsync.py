"""Clock offset/drift modeling and GPS-time log correction and merging.

Field nodes carry no battery-backed clock; their logs are stamped with a
local clock that accumulates offset and drift.  Satellite time fixes taken
during the run let records be mapped back onto a common timeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .simcore import US_PER_S


class NoFixAvailable(Exception):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"no GPS time fix for node {node_id!r}")


@dataclass
class NodeClock:
    offset_s: float = 0.0
    drift_ppm: float = 0.0

    def __post_init__(self):
        if abs(self.drift_ppm) > 1000:
            raise ValueError("drift beyond 1000 ppm sanity bound")


@dataclass(frozen=True)
class LogRecord:
    node_id: str
    local_time_us: int
    kind: str
    payload: object = None


@dataclass(frozen=True)
class GpsTimeFix:
    node_id: str
    gps_time_us: int  # truth
    local_time_at_fix_us: int


def local_time(clock: NodeClock, true_t_us: int) -> int:
    """Local clock reading at a given true time (offset + ppm drift)."""
    if true_t_us < 0:
        raise ValueError("true time must be >= 0")
    skew = clock.offset_s * US_PER_S + clock.drift_ppm * 1e-6 * true_t_us
    return round(true_t_us + skew)


def _fit_for_node(fixes: list[GpsTimeFix]) -> tuple[float, float]:
    """(offset_us, rate) mapping local = offset + rate * true, least squares."""
    if len(fixes) == 1:
        f = fixes[0]
        return float(f.local_time_at_fix_us - f.gps_time_us), 1.0
    n = len(fixes)
    xs = [float(f.gps_time_us) for f in fixes]
    ys = [float(f.local_time_at_fix_us) for f in fixes]
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        return my - mx, 1.0
    rate = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    offset = my - rate * mx
    return offset, rate


def correct(record: LogRecord, fixes: Iterable[GpsTimeFix]) -> int:
    """Estimated true time of a record given the node's GPS fixes."""
    node_fixes = [f for f in fixes if f.node_id == record.node_id]
    if not node_fixes:
        raise NoFixAvailable(record.node_id)
    offset, rate = _fit_for_node(node_fixes)
    return round((record.local_time_us - offset) / rate)


@dataclass
class MergedLog:
    records: list[tuple[int, LogRecord]] = field(default_factory=list)  # (true_time_us, record)


def merge_logs(
    logs: dict[str, list[LogRecord]], fixes: Iterable[GpsTimeFix]
) -> MergedLog:
    """Correct every node's records and sort globally by estimated true time."""
    fixes = list(fixes)
    fits: dict[str, tuple[float, float]] = {}
    for node_id in logs:
        node_fixes = [f for f in fixes if f.node_id == node_id]
        if not node_fixes:
            raise NoFixAvailable(node_id)
        fits[node_id] = _fit_for_node(node_fixes)
    entries = []
    for node_id, records in logs.items():
        offset, rate = fits[node_id]
        for seq, rec in enumerate(records):
            true_us = round((rec.local_time_us - offset) / rate)
            entries.append((true_us, node_id, seq, rec))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    return MergedLog([(t, rec) for t, _, _, rec in entries])
