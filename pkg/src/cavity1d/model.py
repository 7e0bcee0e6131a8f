"""Discrete cavity modes, atoms and the single-excitation Hamiltonian.

Units are dimensionless with hbar = c = eps0 = 1. The physical prefactor of
the dipole coupling is folded into one number per atom, ``coupling``, which is
the coupling magnitude before multiplication by the mode function sin(k_n r).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigError

SPEED_OF_LIGHT = 1.0

# Relative slack when counting modes below the cutoff, so that a cutoff landing
# exactly on a mode frequency (200 = 400 * pi / 2pi) keeps that mode.
_CUTOFF_RTOL = 1e-12


class CouplingModel(str, enum.Enum):
    BROADBAND = "broadband"
    DIPOLE_DE = "dipole_dE"
    MOMENTUM_PA = "momentum_pA"


class Role(str, enum.Enum):
    EMITTER = "emitter"
    CRYSTAL = "crystal"
    ANALYZER = "analyzer"


def sinpi(x):
    """sin(pi * x), exact at integer and half-integer ``x``.

    Central atoms sit at r = L/2 where sin(n pi / 2) must vanish exactly for
    even n; ``np.sin(np.pi * x)`` leaves ~1e-16 residues there.
    """
    x = np.asarray(x, dtype=np.float64)
    q = np.rint(2.0 * x)
    f = x - 0.5 * q  # |f| <= 1/4, exact subtraction
    quadrant = np.mod(q, 4.0)
    s = np.sin(np.pi * f)
    c = np.cos(np.pi * f)
    return np.select([quadrant == 0, quadrant == 1, quadrant == 2], [s, c, -s], -c)


@dataclass(frozen=True)
class ModeBasis:
    cavity_length: float
    cutoff_frequency: float
    mode_count: int

    @cached_property
    def indices(self) -> np.ndarray:
        return np.arange(1, self.mode_count + 1)

    @cached_property
    def frequencies(self) -> np.ndarray:
        # n * (pi c / L) keeps the grid exact when pi / L is a power of two.
        w = self.indices * (math.pi * SPEED_OF_LIGHT / self.cavity_length)
        w.setflags(write=False)
        return w

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = self.frequencies / SPEED_OF_LIGHT
        k.setflags(write=False)
        return k

    @property
    def spacing(self) -> float:
        return math.pi * SPEED_OF_LIGHT / self.cavity_length

    def mode_function(self, position: float) -> np.ndarray:
        """sin(k_n r) for all modes."""
        return sinpi(self.indices * (position / self.cavity_length))


def build_modes(cavity_length: float, cutoff_frequency: float) -> ModeBasis:
    """Modes n = 1..N of a perfect 1-D cavity with omega_N <= cutoff."""
    if not (cavity_length > 0 and math.isfinite(cavity_length)):
        raise ConfigError(f"cavity length must be positive, got {cavity_length!r}")
    spacing = math.pi * SPEED_OF_LIGHT / cavity_length
    if not (cutoff_frequency >= spacing * (1 - _CUTOFF_RTOL)) or not math.isfinite(cutoff_frequency):
        raise ConfigError(
            f"cutoff {cutoff_frequency!r} is below the first mode frequency {spacing!r}"
        )
    count = math.floor(cutoff_frequency / spacing * (1 + _CUTOFF_RTOL))
    return ModeBasis(float(cavity_length), float(cutoff_frequency), int(count))


@dataclass(frozen=True)
class AtomSpec:
    position: float
    transition_frequency: float
    coupling: float
    role: Role = Role.EMITTER
    initial_excited: bool = False

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if not (self.transition_frequency > 0 and math.isfinite(self.transition_frequency)):
            raise ConfigError(f"transition frequency must be positive, got {self.transition_frequency!r}")
        if not (self.coupling >= 0 and math.isfinite(self.coupling)):
            raise ConfigError(f"coupling must be non-negative, got {self.coupling!r}")

    @property
    def wavelength(self) -> float:
        return 2 * math.pi * SPEED_OF_LIGHT / self.transition_frequency


@dataclass(frozen=True)
class SystemConfig:
    modes: ModeBasis
    atoms: tuple[AtomSpec, ...] = ()
    coupling_model: CouplingModel = CouplingModel.BROADBAND

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "coupling_model", CouplingModel(self.coupling_model))
        length = self.modes.cavity_length
        for j, atom in enumerate(self.atoms):
            if not (0.0 < atom.position < length):
                where = "at mirror" if atom.position in (0.0, length) else "outside cavity"
                raise ConfigError(
                    f"atom {j} {where}: position {atom.position!r} not in (0, {length!r})"
                )

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def dimension(self) -> int:
        return self.n_atoms + self.modes.mode_count

    def excited_indices(self) -> list[int]:
        return [j for j, a in enumerate(self.atoms) if a.initial_excited]

    def indices_with_role(self, role: Role | str) -> list[int]:
        role = Role(role)
        return [j for j, a in enumerate(self.atoms) if a.role is role]


def coupling_matrix(config: SystemConfig) -> np.ndarray:
    """g[j, n] = g_j * f(omega_n) * sin(k_n r_j), shape (M, N)."""
    modes = config.modes
    g = np.zeros((config.n_atoms, modes.mode_count))
    w = modes.frequencies
    for j, atom in enumerate(config.atoms):
        row = atom.coupling * modes.mode_function(atom.position)
        if config.coupling_model is CouplingModel.DIPOLE_DE:
            row = row * np.sqrt(w / atom.transition_frequency)
        elif config.coupling_model is CouplingModel.MOMENTUM_PA:
            row = row * np.sqrt(atom.transition_frequency / w)
        g[j] = row
    return g


@dataclass(frozen=True, eq=False)
class RestrictedHamiltonian:
    """H on the (M + N)-dimensional single-excitation sector.

    Slot order: atoms in input order, then modes by ascending n. Atom-mode
    entries are -g[j, n]; there are no atom-atom or mode-mode off-diagonals.
    """

    atom_frequencies: np.ndarray
    mode_frequencies: np.ndarray
    couplings: np.ndarray = field(repr=False)

    @property
    def n_atoms(self) -> int:
        return len(self.atom_frequencies)

    @property
    def dimension(self) -> int:
        return len(self.atom_frequencies) + len(self.mode_frequencies)

    @cached_property
    def matrix(self) -> np.ndarray:
        m = self.n_atoms
        h = np.diag(np.concatenate([self.atom_frequencies, self.mode_frequencies]))
        h[:m, m:] = -self.couplings
        h[m:, :m] = -self.couplings.T
        h.setflags(write=False)
        return h

    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius."""
        return float(np.max(np.sum(np.abs(self.matrix), axis=1)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """H @ x for a state vector or a stack of row vectors."""
        return np.asarray(x) @ self.matrix


def build_hamiltonian(config: SystemConfig) -> RestrictedHamiltonian:
    atom_freq = np.array([a.transition_frequency for a in config.atoms], dtype=np.float64)
    mode_freq = np.array(config.modes.frequencies, dtype=np.float64)
    g = coupling_matrix(config)
    for arr in (atom_freq, mode_freq, g):
        arr.setflags(write=False)
    return RestrictedHamiltonian(atom_freq, mode_freq, g)


def golden_rule_rate(coupling: float, cavity_length: float) -> float:
    """Free-space decay rate 2 pi g^2 rho with rho = L / (2 pi c).

    rho counts the modes an atom at the cavity center actually couples to (odd
    n only). Off-center atoms see twice the modes at half the mean squared
    coupling, which gives the same rate.
    """
    return 2 * math.pi * coupling**2 * cavity_length / (2 * math.pi * SPEED_OF_LIGHT)


def single_atom_config(
    cavity_length: float = 2 * math.pi,
    cutoff_frequency: float = 200.0,
    transition_frequency: float = 100.0,
    coupling_sq: float = 0.5,
    position: float | None = None,
    coupling_model: CouplingModel | str = CouplingModel.BROADBAND,
) -> SystemConfig:
    """One excited atom (centered by default) in a vacuum cavity."""
    modes = build_modes(cavity_length, cutoff_frequency)
    if position is None:
        position = cavity_length / 2
    atom = AtomSpec(position, transition_frequency, math.sqrt(coupling_sq), Role.EMITTER, True)
    return SystemConfig(modes, (atom,), coupling_model)


def with_atoms(config: SystemConfig, atoms: Sequence[AtomSpec]) -> SystemConfig:
    return SystemConfig(config.modes, tuple(atoms), config.coupling_model)
