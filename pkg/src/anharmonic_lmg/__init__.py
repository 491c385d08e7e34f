"""Anharmonic Lipkin-Meshkov-Glick model: spectra, classical limit and quench work statistics."""

__version__ = "0.1.0"

from .errors import DomainError, NumericalError, ParameterError  # noqa: E402
from .spinmodel import ModelParams, Parity, build_hamiltonian, build_sector, coherent_state  # noqa: E402
from .eigensolve import Spectrum, eigh_tridiagonal, excitation_energies, solve  # noqa: E402
from .classical import critical_energies, find_fixed_points, semiclassical_dos  # noqa: E402
from .workstats import QuenchSpec, critical_quench, quench_distribution  # noqa: E402

__all__ = [
    "DomainError", "NumericalError", "ParameterError",
    "ModelParams", "Parity", "build_hamiltonian", "build_sector", "coherent_state",
    "Spectrum", "eigh_tridiagonal", "excitation_energies", "solve",
    "critical_energies", "find_fixed_points", "semiclassical_dos",
    "QuenchSpec", "critical_quench", "quench_distribution",
]
