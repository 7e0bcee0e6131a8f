"""Single-excitation simulator of two-level atoms in a one-dimensional multimode cavity."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    ExcitationState,
    Propagator,
    Trajectory,
    diagonalize,
    evolve_eig,
    evolve_rk,
    initial_state,
    propagate,
)
from .model import (  # noqa: E402
    AtomSpec,
    CouplingModel,
    ModeBasis,
    RestrictedHamiltonian,
    Role,
    SystemConfig,
    build_hamiltonian,
    build_modes,
    coupling_matrix,
    single_atom_config,
)

__all__ = [
    "AtomSpec",
    "CouplingModel",
    "ExcitationState",
    "ModeBasis",
    "Propagator",
    "RestrictedHamiltonian",
    "Role",
    "SystemConfig",
    "Trajectory",
    "build_hamiltonian",
    "build_modes",
    "coupling_matrix",
    "diagonalize",
    "evolve_eig",
    "evolve_rk",
    "initial_state",
    "propagate",
    "single_atom_config",
]
