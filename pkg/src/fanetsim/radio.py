"""Two-radius reception model calibrated from measured field range anchors."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

RADIO_CLASSES = ("wifi_printed", "wifi_usb", "wifi_modified", "lr_node")

# Either antenna lying flat close to the ground collapses the usable range.
DEGRADED_HEIGHT_M = 0.5


class MissingAnchor(Exception):
    pass


@dataclass(frozen=True)
class RadioConfig:
    tx_power_dbm: float = 11.0
    antenna_orientation: str = "vertical"  # vertical | horizontal
    mount_height: float = 2.0  # meters
    radio_class: str = "lr_node"

    def __post_init__(self):
        if not -10.0 <= self.tx_power_dbm <= 30.0:
            raise ValueError("tx_power_dbm outside [-10, 30]")
        if self.antenna_orientation not in ("vertical", "horizontal"):
            raise ValueError("orientation must be vertical or horizontal")

    @property
    def degraded(self) -> bool:
        return self.antenna_orientation == "horizontal" and self.mount_height < DEGRADED_HEIGHT_M


@dataclass(frozen=True)
class PropagationModel:
    r_max: float  # zero-reception boundary, meters
    r_reliable: float  # certain-reception boundary, meters
    orientation_penalty: float = 1.0

    def __post_init__(self):
        if not 0 < self.r_reliable <= self.r_max:
            raise ValueError("need 0 < r_reliable <= r_max")
        if not 0 < self.orientation_penalty <= 1:
            raise ValueError("orientation_penalty must be in (0, 1]")


@dataclass(frozen=True)
class RangeAnchor:
    radio_class: str
    orientation: str
    height_m: float
    range_m: float

    def __post_init__(self):
        if self.range_m <= 0:
            raise ValueError("measured range must be > 0")

    @property
    def degraded(self) -> bool:
        return self.orientation == "horizontal" and self.height_m < DEGRADED_HEIGHT_M


def effective_range(a: RadioConfig, b: RadioConfig, model: PropagationModel) -> float:
    if a.degraded or b.degraded:
        return model.r_max * model.orientation_penalty
    return model.r_max


def reception_prob(
    distance: float, a: RadioConfig, b: RadioConfig, model: PropagationModel
) -> float:
    """1 inside the reliable radius, linear to 0 at the max radius, 0 beyond."""
    if distance < 0:
        raise ValueError("distance must be >= 0")
    scale = model.orientation_penalty if (a.degraded or b.degraded) else 1.0
    r_rel = model.r_reliable * scale
    r_max = model.r_max * scale
    if distance <= r_rel:
        return 1.0
    if distance >= r_max:
        return 0.0
    return (r_max - distance) / (r_max - r_rel)


def calibrate(
    anchors: list[RangeAnchor], reliable_ratio: float = 0.8
) -> dict[str, PropagationModel]:
    """Fit one model per radio class present in the anchor list.

    The non-degraded anchor sets r_max; a degraded anchor for the same class,
    when present, sets the orientation penalty as a range ratio.
    """
    by_class: dict[str, list[RangeAnchor]] = {}
    for a in anchors:
        by_class.setdefault(a.radio_class, []).append(a)
    models: dict[str, PropagationModel] = {}
    for cls, cls_anchors in by_class.items():
        clear = [a for a in cls_anchors if not a.degraded]
        degraded = [a for a in cls_anchors if a.degraded]
        if not clear:
            raise MissingAnchor(f"no non-degraded anchor for class {cls!r}")
        r_max = clear[0].range_m
        penalty = degraded[0].range_m / r_max if degraded else 1.0
        models[cls] = PropagationModel(
            r_max=r_max, r_reliable=reliable_ratio * r_max, orientation_penalty=penalty
        )
    return models


def calibrate_class(
    anchors: list[RangeAnchor], radio_class: str, reliable_ratio: float = 0.8
) -> PropagationModel:
    models = calibrate(
        [a for a in anchors if a.radio_class == radio_class], reliable_ratio
    )
    if radio_class not in models:
        raise MissingAnchor(f"no anchor for class {radio_class!r}")
    return models[radio_class]


def load_default_anchors() -> list[RangeAnchor]:
    """Anchor file shipped with the package (measured field ranges)."""
    raw = json.loads(
        resources.files("fanetsim.data").joinpath("range_anchors.json").read_text()
    )
    return [
        RangeAnchor(a["radio_class"], a["orientation"], a["height_m"], a["range_m"])
        for a in raw["anchors"]
    ]
