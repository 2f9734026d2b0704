"""Simulator for a single-qubit heat engine driven by two generalized measurements."""

__version__ = "0.1.0"

from .channels import KrausChannel, apply, choi_matrix, kraus_a, kraus_b, process_fidelity, q_star
from .cycle import CycleConfig, CycleReport, efficiency, extracted_power, heat_absorbed, run_cycle, sweep, work_extracted
from .estimator import MeasurementEngine
from .mc_errors import EstimateWithError, NoiseSpec, cycle_estimates, estimate
from .pulsesim import NoiseModel, PulseSequence, compile_channel_a, compile_channel_b, compile_composed, simulate
from .thermo import SpinHamiltonianParams, ThermalParams, gibbs_state, omega_factor, spin_temperature_of

__all__ = [
    "CycleConfig",
    "CycleReport",
    "EstimateWithError",
    "KrausChannel",
    "MeasurementEngine",
    "NoiseModel",
    "NoiseSpec",
    "PulseSequence",
    "SpinHamiltonianParams",
    "ThermalParams",
    "apply",
    "choi_matrix",
    "compile_channel_a",
    "compile_channel_b",
    "compile_composed",
    "cycle_estimates",
    "efficiency",
    "estimate",
    "extracted_power",
    "gibbs_state",
    "heat_absorbed",
    "kraus_a",
    "kraus_b",
    "omega_factor",
    "process_fidelity",
    "q_star",
    "run_cycle",
    "simulate",
    "spin_temperature_of",
    "sweep",
    "work_extracted",
]
