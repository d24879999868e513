"""Experiment harnesses: collection flights, link sweep, reference comparison."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources

from . import linkmodels, radio, world
from .linkmodels import (
    DataMessage,
    DedupeBuffer,
    MeshLinkState,
    MeshPhase,
    mesh_step,
    tcp_rate,
    udp_delivered,
)
from .scenario import ConfigInvalid, ScenarioConfig
from .simcore import US_PER_S, Simulator, seconds


class UnknownSeries(Exception):
    pass


class ChartDataError(Exception):
    pass


@dataclass
class CollectionMetrics:
    protocol: str
    altitude_m: float
    speed_mps: float
    seed: int
    replication: int
    per_sensor: dict[str, int]
    duplicates: int = 0
    generated: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.per_sensor.values())

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "altitude_m": self.altitude_m,
            "speed_mps": self.speed_mps,
            "seed": self.seed,
            "replication": self.replication,
            "per_sensor": dict(sorted(self.per_sensor.items())),
            "generated": dict(sorted(self.generated.items())),
            "duplicates": self.duplicates,
            "total": self.total,
        }


@dataclass
class SweepResult:
    stops: list[tuple[float, float, list[float]]]  # (distance, mean rate, per-rep rates)
    reps: int
    fit: tuple[float, float, float]
    mode: str
    udp: list[dict] | None = None  # per-stop delivered/loss/stable when mode == udp

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "reps": self.reps,
            "fit": {"a": self.fit[0], "b": self.fit[1], "c": self.fit[2]},
            "stops": [
                {"distance_m": d, "mean_rate_bps": m, "per_rep_bps": reps}
                for d, m, reps in self.stops
            ],
            "udp": self.udp,
        }


# --- collection runs -------------------------------------------------------


def run_collection(cfg: ScenarioConfig, replication: int = 0) -> tuple[CollectionMetrics, Simulator]:
    """Execute one seeded replication of a collection flight.

    Returns the metrics and the simulator (whose trace can be exported).
    """
    if cfg.protocol not in ("mesh", "broadcast"):
        raise ConfigInvalid("protocol", "run_collection needs mesh or broadcast")
    seed = cfg.master_seed * 1_000_003 + replication
    sim = Simulator(master_seed=seed, scenario_hash=cfg.scenario_hash())
    duration_us = seconds(cfg.duration_s)
    interval_us = seconds(cfg.sensor_message_interval_s)
    altitude = cfg.drones[0].mission.waypoints[0].z
    speed = cfg.drones[0].mission.speed

    delivered: dict[str, set[str]] = {s.sensor_id: set() for s in cfg.layout.sensors}
    duplicates = [0]

    if cfg.protocol == "mesh":
        _wire_mesh(sim, cfg, duration_us, interval_us, delivered)
    else:
        _wire_broadcast(sim, cfg, duration_us, interval_us, delivered, duplicates)

    sim.run_until(duration_us)
    generated = {
        s.sensor_id: (duration_us // interval_us if s.enabled else 0)
        for s in cfg.layout.sensors
    }
    metrics = CollectionMetrics(
        protocol=cfg.protocol,
        altitude_m=altitude,
        speed_mps=speed,
        seed=cfg.master_seed,
        replication=replication,
        per_sensor={k: len(v) for k, v in delivered.items()},
        duplicates=duplicates[0],
        generated=generated,
    )
    return metrics, sim


def _sensor_antenna_pos(sensor: world.Sensor) -> world.Position:
    p = sensor.position
    return world.Position(p.x, p.y, sensor.antenna_height)


def _sensor_radio(sensor: world.Sensor, drone_radio: radio.RadioConfig) -> radio.RadioConfig:
    return radio.RadioConfig(
        tx_power_dbm=drone_radio.tx_power_dbm,
        antenna_orientation=sensor.antenna_orientation,
        mount_height=sensor.antenna_height,
        radio_class=drone_radio.radio_class,
    )


def _wire_mesh(sim, cfg, duration_us, interval_us, delivered):
    params = cfg.mesh
    beacon_us = seconds(params.beacon_interval)
    drone = cfg.drones[0]
    model = cfg.propagation_for(drone.radio)
    states: dict[str, MeshLinkState] = {}
    window_end: dict[str, int] = {}

    sensors = [s for s in cfg.layout.sensors if s.enabled]
    ctx = {}
    for idx, sensor in enumerate(sensors):
        sid = sensor.sensor_id
        states[sid] = MeshLinkState()
        s_cfg = _sensor_radio(sensor, drone.radio)
        rng = sim.rng(idx)
        eff = radio.effective_range(drone.radio, s_cfg, model)
        ctx[sid] = (sensor, s_cfg, rng)
        windows = world.contact_windows(
            drone.mission, _sensor_antenna_pos(sensor), eff, t_end_us=duration_us
        )
        for t0, t1 in windows:
            sim.schedule(t0, sid, "range-gained", {"t1": t1})
            sim.schedule(min(t1, duration_us), sid, "range-lost")

    def distance_at(sensor, t_us):
        return world.position_at(drone.mission, t_us).dist(_sensor_antenna_pos(sensor))

    def on_gained(sim, ev):
        sid = ev.node_id
        window_end[sid] = ev.payload["t1"]
        states[sid], _ = mesh_step(states[sid], True, ev.time_us, params, peer=drone.drone_id)
        sim.schedule(ev.time_us + seconds(params.t_scan), sid, "state-timer")

    def on_timer(sim, ev):
        sid = ev.node_id
        if ev.time_us > window_end.get(sid, -1):
            return
        prev = states[sid].phase
        states[sid], emitted = mesh_step(
            states[sid], True, ev.time_us, params, peer=drone.drone_id
        )
        if "associating" in emitted:
            sim.schedule(ev.time_us + seconds(params.t_assoc), sid, "state-timer")
        elif "connected" in emitted:
            sim.schedule(ev.time_us + beacon_us, sid, "beacon")

    def on_beacon(sim, ev):
        sid = ev.node_id
        if ev.time_us > window_end.get(sid, -1) or states[sid].phase is not MeshPhase.CONNECTED:
            return
        states[sid], emitted = mesh_step(states[sid], True, ev.time_us, params)
        if "data" in emitted:
            sensor, s_cfg, rng = ctx[sid]
            pending = ev.time_us // interval_us - len(delivered[sid])
            if pending >= 1:
                p = radio.reception_prob(distance_at(sensor, ev.time_us), drone.radio, s_cfg, model)
                if p >= 1.0 or rng.next_uniform() < p:
                    delivered[sid].add(f"{sid}#{len(delivered[sid]) + 1}")
        sim.schedule(ev.time_us + beacon_us, sid, "beacon")

    def on_lost(sim, ev):
        sid = ev.node_id
        states[sid], _ = mesh_step(states[sid], False, ev.time_us, params)

    sim.on("range-gained", on_gained)
    sim.on("state-timer", on_timer)
    sim.on("beacon", on_beacon)
    sim.on("range-lost", on_lost)


def _wire_broadcast(sim, cfg, duration_us, interval_us, delivered, duplicates):
    params = cfg.broadcast
    beacon_us = seconds(params.beacon_interval)
    drone = cfg.drones[0]
    model = cfg.propagation_for(drone.radio)
    dedupe = {drone.drone_id: DedupeBuffer(params.dedupe_window)}
    sensors = [s for s in cfg.layout.sensors if s.enabled]
    ctx = {}
    for idx, sensor in enumerate(sensors):
        sid = sensor.sensor_id
        s_cfg = _sensor_radio(sensor, drone.radio)
        ctx[sid] = (sensor, s_cfg, sim.rng(idx))
        eff = radio.effective_range(drone.radio, s_cfg, model)
        windows = world.contact_windows(
            drone.mission, _sensor_antenna_pos(sensor), eff, t_end_us=duration_us
        )
        for t0, t1 in windows:
            # Beacons on the sensor's own schedule, restricted to the window.
            first = max(((t0 + beacon_us - 1) // beacon_us) * beacon_us, beacon_us)
            t = first
            while t <= min(t1, duration_us):
                sim.schedule(t, sid, "beacon")
                t += beacon_us

    def on_beacon(sim, ev):
        sid = ev.node_id
        sensor, s_cfg, rng = ctx[sid]
        k = ev.time_us // interval_us  # newest generated message index
        if k < 1:
            return
        msg = DataMessage(f"{sid}#{k}", sid, k * interval_us, payload_len=params.max_payload)
        drone_pos = world.position_at(drone.mission, ev.time_us)
        got = linkmodels.broadcast_delivery(
            msg,
            _sensor_antenna_pos(sensor),
            s_cfg,
            [(drone.drone_id, drone_pos, drone.radio)],
            model,
            rng,
            dedupe=None,
        )
        if got:
            if msg.msg_id in delivered[sid]:
                duplicates[0] += 1
            else:
                delivered[sid].add(msg.msg_id)

    sim.on("beacon", on_beacon)


# --- link-range sweep ------------------------------------------------------

DEFAULT_STOPS = [20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0, 180.0, 200.0]
SWEEP_NOISE = 0.02  # multiplicative measurement jitter per replication


def run_link_sweep(cfg: ScenarioConfig) -> SweepResult:
    """Throughput vs distance at fixed stops, replicated and averaged."""
    if len(cfg.drones) != 2:
        raise ConfigInvalid("drones", "link sweep needs exactly 2 drones")
    stationary = [d for d in cfg.drones if len(set(d.mission.waypoints)) == 1]
    if not stationary:
        raise ConfigInvalid("drones", "one drone must be stationary")
    model = cfg.throughput or linkmodels.DEFAULT_THROUGHPUT
    stops = [float(s) for s in (cfg.sweep_stops or DEFAULT_STOPS)]
    if sorted(set(stops)) != stops:
        raise ConfigInvalid("link_params.throughput.stops", "must be strictly increasing")
    reps = cfg.replications
    rows = []
    udp_rows = []
    for i, d in enumerate(stops):
        base = tcp_rate(d, model)
        per_rep = []
        for r in range(reps):
            rng = Simulator(cfg.master_seed * 7919 + r).rng(i)
            jitter = 1.0 + SWEEP_NOISE * (2.0 * rng.next_uniform() - 1.0)
            per_rep.append(base * jitter)
        mean = sum(per_rep) / reps
        rows.append((d, mean, per_rep))
        if cfg.sweep_mode == "udp":
            delivered, loss = udp_delivered(model.udp_offered, d, model)
            udp_rows.append(
                {
                    "distance_m": d,
                    "offered_bps": model.udp_offered,
                    "delivered_bps": delivered,
                    "loss": loss,
                    "stable": linkmodels.is_stable(loss, model),
                }
            )
    fit = linkmodels.fit_quadratic([(d, m) for d, m, _ in rows])
    return SweepResult(rows, reps, fit, cfg.sweep_mode, udp_rows or None)


# --- reference dataset and comparison --------------------------------------


@dataclass
class ReferenceDataset:
    series: dict[str, dict[str, int]]
    scale_note: str = ""

    @staticmethod
    def key(protocol: str, source: str, altitude: float) -> str:
        return f"{protocol}/{source}/{int(altitude)}"

    def get(self, key: str) -> dict[str, int]:
        if key not in self.series:
            raise UnknownSeries(key)
        return self.series[key]


def load_reference_dataset() -> ReferenceDataset:
    raw = json.loads(
        resources.files("fanetsim.data").joinpath("reference_dataset.json").read_text()
    )
    return ReferenceDataset(series=raw["series"], scale_note=raw["scale_note"])


@dataclass
class ComparisonReport:
    key: str
    rows: list[dict]  # sensor, observed, reference, abs_delta, rel_delta, divergent
    total_observed: int
    total_reference: int

    def to_rows(self) -> list[dict]:
        return self.rows


def compare(per_sensor: dict[str, int], ref: ReferenceDataset, key: str) -> ComparisonReport:
    """Per-sensor deltas of observed counts against a reference series."""
    series = ref.get(key)
    rows = []
    for sensor in sorted(series, key=lambda s: int(s.lstrip("S"))):
        obs = per_sensor.get(sensor, 0)
        expected = series[sensor]
        delta = obs - expected
        rel = delta / expected if expected else (math.inf if obs else 0.0)
        rows.append(
            {
                "sensor": sensor,
                "observed": obs,
                "reference": expected,
                "abs_delta": delta,
                "rel_delta": rel,
                "divergent": (expected == 0) != (obs == 0),
            }
        )
    return ComparisonReport(
        key=key,
        rows=rows,
        total_observed=sum(per_sensor.get(s, 0) for s in series),
        total_reference=sum(series.values()),
    )


# --- chart export ----------------------------------------------------------


def emit_chart_data(obj, path) -> None:
    """CSV export of collection metrics (list or single) or a sweep result."""
    if isinstance(obj, CollectionMetrics):
        obj = [obj]
    if isinstance(obj, SweepResult):
        if not obj.stops:
            raise ChartDataError("empty sweep result")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            a, b, c = obj.fit
            fh.write(f"# fit_a={a!r},fit_b={b!r},fit_c={c!r},reps={obj.reps},mode={obj.mode}\n")
            w = csv.writer(fh)
            w.writerow(["distance_m", "mean_rate_bps"])
            for d, m, _ in obj.stops:
                w.writerow([d, m])
        return
    if not obj or all(not m.per_sensor for m in obj):
        raise ChartDataError("no metrics to export")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sensor", "protocol", "altitude_m", "speed_mps", "count"])
        for m in obj:
            for sensor in sorted(m.per_sensor, key=lambda s: int(s.lstrip("S"))):
                w.writerow([sensor, m.protocol, m.altitude_m, m.speed_mps, m.per_sensor[sensor]])
