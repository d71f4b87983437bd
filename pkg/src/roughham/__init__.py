"""Modified equations and long-time diagnostics for rough Hamiltonian systems."""

from .core import DomainError, Grid, MultiIndex, Trajectory, multi_indices_up_to
from .integrators import SolverConfig, StepError, integrate, make_stepper
from .noise import DriverPath, NoiseSpec, sample_fbm_path, sample_fbm_paths, truncate_path
from .systems import HamiltonianSystem, KuboParams, make_system

__all__ = [
    "DomainError",
    "DriverPath",
    "Grid",
    "HamiltonianSystem",
    "KuboParams",
    "MultiIndex",
    "NoiseSpec",
    "SolverConfig",
    "StepError",
    "Trajectory",
    "integrate",
    "make_stepper",
    "make_system",
    "multi_indices_up_to",
    "sample_fbm_path",
    "sample_fbm_paths",
    "truncate_path",
]

__version__ = "0.1.0"
