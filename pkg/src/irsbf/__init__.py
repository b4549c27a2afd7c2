"""Exact discrete phase-shift beamforming for intelligent reflecting
surfaces: a linear-time globally optimal sweep solver, classic
suboptimal baselines, an exhaustive oracle, and a seeded Monte Carlo
link simulator.
"""

from .baselines import BcdReport, DEFAULT_BRUTE_CAP, bcd, brute_force, cpp
from .channel_model import (
    Geometry,
    LinkBudget,
    RngStream,
    dbm_to_watts,
    default_geometry,
    pathloss_direct_db,
    pathloss_reflect_db,
    sample_channels,
)
from .core import (
    ChannelSet,
    InstanceError,
    ParameterError,
    PhaseConfig,
    composite,
    signed_gap,
    snr_boost,
    wrap_angle,
    wrap_angles,
)
from .solver import (
    Breakpoint,
    BreakpointList,
    SolveResult,
    SolveStats,
    breakpoints,
    initial_assignment,
    solve,
    solve_reduced,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BcdReport",
    "Breakpoint",
    "BreakpointList",
    "ChannelSet",
    "DEFAULT_BRUTE_CAP",
    "Geometry",
    "InstanceError",
    "LinkBudget",
    "ParameterError",
    "PhaseConfig",
    "RngStream",
    "SolveResult",
    "SolveStats",
    "bcd",
    "breakpoints",
    "brute_force",
    "composite",
    "cpp",
    "dbm_to_watts",
    "default_geometry",
    "initial_assignment",
    "pathloss_direct_db",
    "pathloss_reflect_db",
    "sample_channels",
    "signed_gap",
    "snr_boost",
    "solve",
    "solve_reduced",
    "sweep",
    "wrap_angle",
    "wrap_angles",
]
