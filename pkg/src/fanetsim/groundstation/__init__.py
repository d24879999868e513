from .service import (
    Ack,
    DuplicateVehicleId,
    GroundStation,
    MalformedMessage,
    NoActiveRun,
    NoTargetsResolved,
    VehicleUnreachable,
)
from .store import RunStore, UnknownRun
from .bridge import SimFleetBridge
from .app import create_app

__all__ = [
    "Ack",
    "DuplicateVehicleId",
    "GroundStation",
    "MalformedMessage",
    "NoActiveRun",
    "NoTargetsResolved",
    "VehicleUnreachable",
    "RunStore",
    "UnknownRun",
    "SimFleetBridge",
    "create_app",
]
