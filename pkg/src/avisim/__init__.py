"""Variational and asynchronous variational integrators for mechanical
systems with overlapping-stencil potentials such as penalty contact."""

from .core import (
    ContractError,
    DegenerateGeometryWarning,
    Kind,
    MassModel,
    PotentialTerm,
    SystemState,
    angular_momentum,
    kinetic_energy,
    linear_momentum,
    potential_energy,
    potential_gradient,
    total_energy,
    total_potential,
)
from .diagnostics import DiagnosticsRecord, DriftReport, Sample, analyze, read_csv, write_csv
from .integrators import (
    AviRunner,
    SyncStepper,
    avi_run,
    oracle_run,
    stable_step_estimate,
    sync_run,
    sync_step,
)
from .potentials import (
    DegenerateGeometryError,
    GravityParams,
    HingeParams,
    PenaltyParams,
    SpringParams,
)
from .schedule import EventSchedule, ScheduleError, build_schedule, iter_events

__all__ = [
    "analyze",
    "angular_momentum",
    "avi_run",
    "AviRunner",
    "build_schedule",
    "ContractError",
    "DegenerateGeometryError",
    "DegenerateGeometryWarning",
    "DiagnosticsRecord",
    "DriftReport",
    "EventSchedule",
    "GravityParams",
    "HingeParams",
    "iter_events",
    "Kind",
    "kinetic_energy",
    "linear_momentum",
    "MassModel",
    "oracle_run",
    "PenaltyParams",
    "potential_energy",
    "potential_gradient",
    "PotentialTerm",
    "read_csv",
    "Sample",
    "ScheduleError",
    "SpringParams",
    "stable_step_estimate",
    "sync_run",
    "sync_step",
    "SyncStepper",
    "SystemState",
    "total_energy",
    "total_potential",
    "write_csv",
]

__version__ = "0.1.0"
