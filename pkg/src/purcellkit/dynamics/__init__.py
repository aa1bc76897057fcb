"""Truncated transmon-resonator Lindblad simulator and readout chain."""

from .evolve import Pulse, PulseSequence, SimResult, evolve_lindblad
from .experiments import (
    ProbeSpec,
    RabiResult,
    ResetResult,
    StarkResult,
    simulate_probe_reflection,
    simulate_rabi,
    simulate_reset,
    simulate_stark_ramsey,
    steady_state_photons,
)
from .model import LindbladModel, build_model
from .readout import DiscriminationResult, readout_discrimination, stats_from_discrimination

__all__ = [
    "LindbladModel",
    "build_model",
    "Pulse",
    "PulseSequence",
    "SimResult",
    "evolve_lindblad",
    "ProbeSpec",
    "RabiResult",
    "StarkResult",
    "ResetResult",
    "simulate_rabi",
    "simulate_stark_ramsey",
    "simulate_probe_reflection",
    "steady_state_photons",
    "simulate_reset",
    "DiscriminationResult",
    "readout_discrimination",
    "stats_from_discrimination",
]
