"""Protocol-level link behavior: mesh association, broadcast delivery, throughput."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .radio import PropagationModel, RadioConfig, reception_prob
from .simcore import RngStream, seconds
from .world import Position

BROADCAST_MAX_PAYLOAD = 250  # bytes


class PayloadTooLarge(Exception):
    pass


class DegenerateFit(Exception):
    pass


# --- mesh association state machine ---------------------------------------


class MeshPhase(Enum):
    DISCONNECTED = "disconnected"
    SCANNING = "scanning"
    ASSOCIATING = "associating"
    CONNECTED = "connected"


@dataclass
class MeshParams:
    t_scan: float = 2.0
    t_assoc: float = 6.0
    t_handover: float = 4.0
    beacon_interval: float = 1.0
    keepalive_timeout: float = 3.0

    def __post_init__(self):
        for name in ("t_scan", "t_assoc", "t_handover", "beacon_interval", "keepalive_timeout"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def association_time(self) -> float:
        return self.t_scan + self.t_assoc


@dataclass(frozen=True)
class MeshLinkState:
    phase: MeshPhase = MeshPhase.DISCONNECTED
    phase_entered_at: int = 0  # microseconds
    peer: str | None = None


def mesh_step(
    state: MeshLinkState,
    in_range: bool,
    now_us: int,
    params: MeshParams,
    peer: str | None = None,
) -> tuple[MeshLinkState, list[str]]:
    """Advance the association machine by at most one transition.

    Data-exchange opportunities ("data") are emitted only while CONNECTED.
    """
    if now_us < state.phase_entered_at:
        raise ValueError("now precedes phase entry time")
    if not in_range:
        if state.phase is MeshPhase.DISCONNECTED:
            return state, []
        return MeshLinkState(MeshPhase.DISCONNECTED, now_us, None), ["disconnected"]
    dwell_us = now_us - state.phase_entered_at
    if state.phase is MeshPhase.DISCONNECTED:
        return MeshLinkState(MeshPhase.SCANNING, now_us, None), ["scan-start"]
    if state.phase is MeshPhase.SCANNING:
        if dwell_us >= seconds(params.t_scan):
            return MeshLinkState(MeshPhase.ASSOCIATING, now_us, peer), ["associating"]
        return state, []
    if state.phase is MeshPhase.ASSOCIATING:
        if dwell_us >= seconds(params.t_assoc):
            return MeshLinkState(MeshPhase.CONNECTED, now_us, state.peer or peer), ["connected"]
        return state, []
    # CONNECTED: each step is a data-exchange opportunity
    return state, ["data"]


# --- broadcast (connectionless) link --------------------------------------


@dataclass
class BroadcastParams:
    beacon_interval: float = 1.0
    max_payload: int = BROADCAST_MAX_PAYLOAD
    dedupe_window: int = 64

    def __post_init__(self):
        if self.max_payload > BROADCAST_MAX_PAYLOAD:
            raise ValueError(f"max_payload limited to {BROADCAST_MAX_PAYLOAD} bytes")


@dataclass(frozen=True)
class DataMessage:
    msg_id: str
    origin: str
    created_at: int  # microseconds
    payload_len: int = 32


class DedupeBuffer:
    """Sliding window of recently seen message ids."""

    def __init__(self, window: int):
        self._order: deque[str] = deque(maxlen=window)
        self._seen: set[str] = set()

    def seen(self, msg_id: str) -> bool:
        if msg_id in self._seen:
            return True
        if len(self._order) == self._order.maxlen and self._order.maxlen:
            self._seen.discard(self._order[0])
        self._order.append(msg_id)
        self._seen.add(msg_id)
        return False


def broadcast_delivery(
    msg: DataMessage,
    sender_pos: Position,
    sender_cfg: RadioConfig,
    receivers: list[tuple[str, Position, RadioConfig]],
    model: PropagationModel,
    rng: RngStream,
    dedupe: dict[str, DedupeBuffer] | None = None,
) -> list[str]:
    """Independent probabilistic delivery to each in-range receiver."""
    if msg.payload_len > BROADCAST_MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload {msg.payload_len} > {BROADCAST_MAX_PAYLOAD} bytes")
    delivered = []
    for node_id, pos, cfg in receivers:
        p = reception_prob(sender_pos.dist(pos), sender_cfg, cfg, model)
        if p <= 0.0:
            continue
        if p < 1.0 and rng.next_uniform() >= p:
            continue
        if dedupe is not None:
            buf = dedupe.setdefault(node_id, DedupeBuffer(64))
            if buf.seen(msg.msg_id):
                continue
        delivered.append(node_id)
    return delivered


# --- distance-dependent throughput ----------------------------------------


@dataclass
class ThroughputModel:
    # rate(d) = a + b*d + c*d^2 in bit/s, clamped at 0.
    a: float
    b: float
    c: float
    udp_offered: float = 1_000_000.0
    loss_stability_threshold: float = 0.05

    def __post_init__(self):
        if self.udp_offered <= 0:
            raise ValueError("udp_offered must be > 0")


# Synthetic placeholder coefficients: ~30 Mbit/s at contact falling to
# ~2 Mbit/s at 200 m, non-increasing over the calibrated 0-200 m domain.
# Replace with fit_quadratic output once measured sweep data is available.
DEFAULT_THROUGHPUT = ThroughputModel(a=30e6, b=-190e3, c=250.0)


def tcp_rate(distance: float, model: ThroughputModel) -> float:
    if distance < 0:
        raise ValueError("distance must be >= 0")
    return max(0.0, model.a + model.b * distance + model.c * distance * distance)


def udp_delivered(
    offered: float, distance: float, model: ThroughputModel
) -> tuple[float, float]:
    """(delivered bit/s, loss fraction); capacity is the fitted rate curve."""
    if offered <= 0:
        raise ValueError("offered must be > 0")
    capacity = tcp_rate(distance, model)
    delivered = min(offered, capacity)
    return delivered, 1.0 - delivered / offered


def is_stable(loss_fraction: float, model: ThroughputModel) -> bool:
    return loss_fraction <= model.loss_stability_threshold


def fit_quadratic(points: list[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares degree-2 fit; returns (a, b, c) for a + b*d + c*d^2."""
    if len({d for d, _ in points}) < 3:
        raise DegenerateFit("need at least 3 distinct distances")
    xs = np.array([d for d, _ in points], dtype=float)
    ys = np.array([r for _, r in points], dtype=float)
    c2, c1, c0 = np.polyfit(xs, ys, 2)
    return float(c0), float(c1), float(c2)


def model_from_fit(
    points: list[tuple[float, float]], udp_offered: float = 1e6, loss_threshold: float = 0.05
) -> ThroughputModel:
    a, b, c = fit_quadratic(points)
    return ThroughputModel(a, b, c, udp_offered, loss_threshold)
