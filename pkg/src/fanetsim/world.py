"""Geometry and mobility: missions, sensor layouts, contact windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .simcore import US_PER_S, RngStream


class LayoutInfeasible(Exception):
    pass


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float = 0.0

    def dist(self, other: "Position") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )


@dataclass(frozen=True)
class FieldBounds:
    # 316.2 x 316.2 m is close to the 10 ha working area.
    width: float = 316.2
    height: float = 316.2


@dataclass
class Mission:
    waypoints: list[Position]
    speed: float  # m/s
    loiter: float = 0.0  # seconds at each waypoint
    endurance_limit: float | None = None  # seconds

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("mission speed must be > 0")
        if not self.waypoints:
            raise ValueError("mission needs at least one waypoint")
        if self.endurance_limit is not None and self.duration() > self.endurance_limit:
            raise ValueError("mission exceeds endurance limit")

    def segments(self) -> list[tuple[float, float, Position, Position]]:
        """(t_start, t_end, p_start, p_end) in seconds; loiter segments included."""
        segs = []
        t = 0.0
        prev = self.waypoints[0]
        if self.loiter > 0:
            segs.append((t, t + self.loiter, prev, prev))
            t += self.loiter
        for wp in self.waypoints[1:]:
            d = prev.dist(wp)
            if d > 0:
                segs.append((t, t + d / self.speed, prev, wp))
                t += d / self.speed
            if self.loiter > 0:
                segs.append((t, t + self.loiter, wp, wp))
                t += self.loiter
            prev = wp
        return segs

    def duration(self) -> float:
        segs = self.segments()
        return segs[-1][1] if segs else 0.0

    def duration_us(self) -> int:
        return round(self.duration() * US_PER_S)


@dataclass
class Sensor:
    sensor_id: str
    position: Position
    antenna_height: float = 0.1
    antenna_orientation: str = "vertical"
    enabled: bool = True


@dataclass
class SensorLayout:
    sensors: list[Sensor] = field(default_factory=list)

    def __post_init__(self):
        ids = [s.sensor_id for s in self.sensors]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate sensor ids in layout")


def position_at(mission: Mission, t_us: int) -> Position:
    """Piecewise-linear constant-speed interpolation; holds last waypoint after end."""
    if t_us < 0:
        raise ValueError("time must be >= 0")
    t = t_us / US_PER_S
    segs = mission.segments()
    if not segs or t >= segs[-1][1]:
        return mission.waypoints[-1]
    for t0, t1, p0, p1 in segs:
        if t <= t1:
            if t1 == t0:
                return p0
            f = (t - t0) / (t1 - t0)
            return Position(
                p0.x + f * (p1.x - p0.x),
                p0.y + f * (p1.y - p0.y),
                p0.z + f * (p1.z - p0.z),
            )
    return mission.waypoints[-1]


def contact_windows(
    mission: Mission,
    target: Position,
    range_m: float,
    t_end_us: int | None = None,
) -> list[tuple[int, int]]:
    """Maximal disjoint intervals (microseconds) with 3-D distance <= range_m.

    Solved per segment in closed form (distance^2 is quadratic in t along a
    linear segment), then merged.  Horizon defaults to mission duration.
    """
    if range_m <= 0:
        raise ValueError("range must be > 0")
    horizon = mission.duration() if t_end_us is None else t_end_us / US_PER_S
    r2 = range_m * range_m
    raw: list[tuple[float, float]] = []
    segs = mission.segments()
    for t0, t1, p0, p1 in segs:
        if t0 >= horizon:
            break
        t1c = min(t1, horizon)
        raw.extend(_segment_windows(t0, t1c, p0, p1, t1 - t0, target, r2))
    # Hold at last waypoint beyond mission end.
    if segs and horizon > segs[-1][1]:
        last = mission.waypoints[-1]
        if last.dist(target) ** 2 <= r2:
            raw.append((segs[-1][1], horizon))
    if not segs:  # single stationary waypoint, zero-duration mission
        if mission.waypoints[0].dist(target) ** 2 <= r2 and horizon > 0:
            raw.append((0.0, horizon))
    merged: list[tuple[float, float]] = []
    for a, b in raw:
        if merged and a <= merged[-1][1] + 1e-12:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return [(round(a * US_PER_S), round(b * US_PER_S)) for a, b in merged if b > a]


def _segment_windows(t0, t1, p0, p1, seg_len_t, target, r2):
    dx, dy, dz = p0.x - target.x, p0.y - target.y, p0.z - target.z
    if seg_len_t <= 0 or (p0.x == p1.x and p0.y == p1.y and p0.z == p1.z):
        if dx * dx + dy * dy + dz * dz <= r2 and t1 > t0:
            return [(t0, t1)]
        return []
    vx = (p1.x - p0.x) / seg_len_t
    vy = (p1.y - p0.y) / seg_len_t
    vz = (p1.z - p0.z) / seg_len_t
    # |p0 - target + v*u|^2 <= r^2 for u in [0, t1 - t0]
    a = vx * vx + vy * vy + vz * vz
    b = 2 * (dx * vx + dy * vy + dz * vz)
    c = dx * dx + dy * dy + dz * dz - r2
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    u_lo = (-b - sq) / (2 * a)
    u_hi = (-b + sq) / (2 * a)
    lo = max(t0 + u_lo, t0)
    hi = min(t0 + u_hi, t1)
    if hi <= lo:
        return []
    return [(lo, hi)]


def generate_layout(
    n: int,
    bounds: FieldBounds,
    rng: RngStream,
    min_separation: float = 20.0,
    antenna_height: float = 0.1,
    max_rejects: int = 10_000,
) -> SensorLayout:
    """Rejection-sample n sensor positions with a minimum pairwise separation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    placed: list[Position] = []
    rejects = 0
    while len(placed) < n:
        p = Position(rng.next_uniform() * bounds.width, rng.next_uniform() * bounds.height, 0.0)
        if n > 1 and any(p.dist(q) < min_separation for q in placed):
            rejects += 1
            if rejects >= max_rejects:
                raise LayoutInfeasible(
                    f"could not place {n} sensors with {min_separation} m separation"
                )
            continue
        placed.append(p)
    sensors = [
        Sensor(f"S{i + 1}", p, antenna_height=antenna_height) for i, p in enumerate(placed)
    ]
    return SensorLayout(sensors)
