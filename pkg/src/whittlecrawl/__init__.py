"""Whittle-index crawl scheduling for sources of ephemeral content."""

__version__ = "0.1.0"

from .model import (FleetParams, InvalidParameterError, SourceParams, SourceState, active_step,
                    derive_constants, passive_orbit, passive_step, table1_fleet)
from .whittle import eta, fleet_indices, lattice_index, whittle_index
from .policy import PolicySpec, StaticSchedule
from .sim import ArrivalModel, run

__all__ = [
    "FleetParams", "InvalidParameterError", "SourceParams", "SourceState", "active_step",
    "derive_constants", "passive_orbit", "passive_step", "table1_fleet", "eta", "fleet_indices",
    "lattice_index", "whittle_index", "PolicySpec", "StaticSchedule", "ArrivalModel", "run",
]
