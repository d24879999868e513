"""Scenario configuration: parsing, validation, and canonical builders."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

from .linkmodels import BroadcastParams, MeshParams, ThroughputModel
from .radio import PropagationModel, RadioConfig, calibrate_class, load_default_anchors
from .world import FieldBounds, Mission, Position, Sensor, SensorLayout

PROTOCOLS = ("mesh", "broadcast", "adhoc_throughput")


class ConfigInvalid(Exception):
    """Raised with a field-level diagnostic message."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class DroneSpec:
    drone_id: str
    mission: Mission
    radio: RadioConfig


@dataclass
class ScenarioConfig:
    protocol: str
    field: FieldBounds
    layout: SensorLayout
    drones: list[DroneSpec]
    duration_s: float
    replications: int = 1
    master_seed: int = 1
    sensor_message_interval_s: float = 1.0
    mesh: MeshParams = field(default_factory=MeshParams)
    broadcast: BroadcastParams = field(default_factory=BroadcastParams)
    throughput: ThroughputModel | None = None
    sweep_stops: list[float] | None = None
    sweep_mode: str = "udp"
    propagation: PropagationModel | None = None  # override; else calibrated per class
    raw: dict | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigInvalid("protocol", f"must be one of {PROTOCOLS}")
        if self.duration_s <= 0:
            raise ConfigInvalid("duration_s", "must be > 0")
        if self.replications < 1:
            raise ConfigInvalid("replications", "must be >= 1")
        if not self.drones:
            raise ConfigInvalid("drones", "at least one drone required")

    def propagation_for(self, drone_radio: RadioConfig) -> PropagationModel:
        if self.propagation is not None:
            return self.propagation
        return calibrate_class(load_default_anchors(), drone_radio.radio_class)

    def canonical_json(self) -> str:
        if self.raw is not None:
            return json.dumps(self.raw, sort_keys=True)
        return json.dumps({"protocol": self.protocol, "seed": self.master_seed}, sort_keys=True)

    def scenario_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def serpentine_mission(
    bounds: FieldBounds,
    altitude_m: float,
    speed_mps: float,
    lane_spacing_m: float = 40.0,
    margin_m: float = 20.0,
) -> Mission:
    """Back-and-forth sweep covering the field at constant altitude."""
    x0, x1 = margin_m, bounds.width - margin_m
    y_top = bounds.height - margin_m
    lanes: list[float] = []
    y = margin_m
    while y < y_top - 1e-9:
        lanes.append(y)
        y += lane_spacing_m
    lanes.append(y_top)  # last lane snaps to the far margin
    wps: list[Position] = []
    for i, lane_y in enumerate(lanes):
        if i % 2 == 0:
            wps.append(Position(x0, lane_y, altitude_m))
            wps.append(Position(x1, lane_y, altitude_m))
        else:
            wps.append(Position(x1, lane_y, altitude_m))
            wps.append(Position(x0, lane_y, altitude_m))
    return Mission(wps, speed_mps)


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise ConfigInvalid(f"{path}{key}", "missing required field")
    return obj[key]


def _parse_layout(obj: dict, bounds: FieldBounds) -> SensorLayout:
    sensors = []
    for i, s in enumerate(_require(obj, "sensors", "layout.")):
        path = f"layout.sensors[{i}]."
        pos = Position(_require(s, "x", path), _require(s, "y", path), s.get("z", 0.0))
        if not (0 <= pos.x <= bounds.width and 0 <= pos.y <= bounds.height):
            raise ConfigInvalid(f"{path}x/y", "sensor outside field bounds")
        sensors.append(
            Sensor(
                sensor_id=_require(s, "id", path),
                position=pos,
                antenna_height=s.get("antenna_height", 0.1),
                antenna_orientation=s.get("orientation", "vertical"),
                enabled=s.get("enabled", True),
            )
        )
    return SensorLayout(sensors)


def _parse_drone(obj: dict, bounds: FieldBounds, idx: int) -> DroneSpec:
    path = f"drones[{idx}]."
    speed = _require(obj, "speed_mps", path)
    if "pattern" in obj:
        pat = obj["pattern"]
        if pat.get("type") != "serpentine":
            raise ConfigInvalid(f"{path}pattern.type", "unknown pattern")
        mission = serpentine_mission(
            bounds,
            _require(pat, "altitude_m", f"{path}pattern."),
            speed,
            pat.get("lane_spacing_m", 40.0),
            pat.get("margin_m", 20.0),
        )
    elif "waypoints" in obj:
        wps = [Position(*wp) for wp in obj["waypoints"]]
        mission = Mission(wps, speed, loiter=obj.get("loiter_s", 0.0))
    else:
        raise ConfigInvalid(f"{path}pattern", "need pattern or waypoints")
    radio_obj = obj.get("radio", {})
    radio = RadioConfig(
        tx_power_dbm=radio_obj.get("tx_power_dbm", 11.0),
        antenna_orientation=radio_obj.get("orientation", "vertical"),
        mount_height=radio_obj.get("mount_height", 0.3),
        radio_class=radio_obj.get("radio_class", "lr_node"),
    )
    return DroneSpec(_require(obj, "id", path), mission, radio)


def parse_scenario(obj: dict) -> ScenarioConfig:
    protocol = _require(obj, "protocol", "")
    if protocol not in PROTOCOLS:
        raise ConfigInvalid("protocol", f"must be one of {PROTOCOLS}")
    fobj = obj.get("field", {})
    bounds = FieldBounds(fobj.get("width", 316.2), fobj.get("height", 316.2))
    layout = _parse_layout(_require(obj, "layout", ""), bounds)
    drones = [_parse_drone(d, bounds, i) for i, d in enumerate(_require(obj, "drones", ""))]
    lp = obj.get("link_params", {})
    mesh = MeshParams(**lp["mesh"]) if "mesh" in lp else MeshParams()
    broadcast = BroadcastParams(**lp["broadcast"]) if "broadcast" in lp else BroadcastParams()
    throughput = None
    sweep_stops = None
    sweep_mode = "udp"
    if "throughput" in lp:
        t = lp["throughput"]
        throughput = ThroughputModel(
            a=_require(t, "a", "link_params.throughput."),
            b=_require(t, "b", "link_params.throughput."),
            c=_require(t, "c", "link_params.throughput."),
            udp_offered=t.get("udp_offered", 1e6),
            loss_stability_threshold=t.get("loss_threshold", 0.05),
        )
        sweep_stops = t.get("stops")
        sweep_mode = t.get("mode", "udp")
    propagation = None
    if "propagation" in lp:
        p = lp["propagation"]
        propagation = PropagationModel(
            r_max=_require(p, "r_max", "link_params.propagation."),
            r_reliable=_require(p, "r_reliable", "link_params.propagation."),
            orientation_penalty=p.get("orientation_penalty", 1.0),
        )
    try:
        return ScenarioConfig(
            protocol=protocol,
            field=bounds,
            layout=layout,
            drones=drones,
            duration_s=_require(obj, "duration_s", ""),
            replications=obj.get("replications", 1),
            master_seed=obj.get("master_seed", 1),
            sensor_message_interval_s=obj.get("sensor_message_interval_s", 1.0),
            mesh=mesh,
            broadcast=broadcast,
            throughput=throughput,
            sweep_stops=sweep_stops,
            sweep_mode=sweep_mode,
            propagation=propagation,
            raw=obj,
        )
    except ValueError as exc:
        raise ConfigInvalid("scenario", str(exc)) from exc


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid("json", f"parse error at line {exc.lineno}: {exc.msg}") from exc
    return parse_scenario(obj)


def load_bundled_scenario(name: str) -> ScenarioConfig:
    raw = resources.files("fanetsim.data").joinpath(f"{name}.json").read_text()
    return parse_scenario(json.loads(raw))


def canonical_collection_scenario(
    protocol: str, altitude_m: float, speed_mps: float = 5.0, master_seed: int = 1
) -> ScenarioConfig:
    """The shipped 10-sensor scenario at a given flight altitude and speed."""
    base = json.loads(
        resources.files("fanetsim.data").joinpath("canonical_collection.json").read_text()
    )
    base["protocol"] = protocol
    base["master_seed"] = master_seed
    base["drones"][0]["pattern"]["altitude_m"] = altitude_m
    base["drones"][0]["speed_mps"] = speed_mps
    if protocol == "broadcast":
        # Broadcast flights use the full calibrated range of the radio class.
        base["link_params"].pop("propagation", None)
    return parse_scenario(base)
