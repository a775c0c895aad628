"""Two identical two-level atoms in a lossy single-mode cavity.

Evolves the joint density matrix from the zero-excitation vacuum under the
full (counter-rotating) or RWA two-atom Rabi Hamiltonian with cavity photon
loss, and computes atom-atom entanglement (Wootters concurrence) and
quantum discord along the way.
"""

__version__ = "0.1.0"

from .correlations import (
    CorrelationRecord,
    binary_entropy,
    concurrence_general,
    concurrence_x,
    discord_bruteforce,
    discord_x,
    expectation,
    mutual_information,
    von_neumann_entropy,
)
from .dynamics import (
    ConfigError,
    DynamicsError,
    SimConfig,
    SystemState,
    build_hamiltonian,
    detect_steady_state,
    evolve,
    lindblad_rhs,
)
from .hilbert import (
    BasisSpec,
    annihilation,
    atomic_operator,
    basis_state,
    build_basis,
    creation,
    excitation_operators,
    vacuum_density,
)
from .pipeline import (
    ConvergenceReport,
    RunResult,
    SweepSpec,
    convergence_study,
    run,
    run_single,
    run_sweep,
)
from .reduction import XState, partial_trace_cavity, to_xstate

__all__ = [
    "__version__",
    "BasisSpec",
    "ConfigError",
    "ConvergenceReport",
    "CorrelationRecord",
    "DynamicsError",
    "RunResult",
    "SimConfig",
    "SweepSpec",
    "SystemState",
    "XState",
    "annihilation",
    "atomic_operator",
    "basis_state",
    "binary_entropy",
    "build_basis",
    "build_hamiltonian",
    "concurrence_general",
    "concurrence_x",
    "convergence_study",
    "creation",
    "detect_steady_state",
    "discord_bruteforce",
    "discord_x",
    "evolve",
    "excitation_operators",
    "expectation",
    "lindblad_rhs",
    "mutual_information",
    "partial_trace_cavity",
    "run",
    "run_single",
    "run_sweep",
    "to_xstate",
    "vacuum_density",
    "von_neumann_entropy",
]
