"""Experimental configurations built on top of the model and propagators."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dynamics import DEFAULT_DT, propagate
from .errors import CavityError, ConfigError, NoSignalError
from .model import SPEED_OF_LIGHT, AtomSpec, ModeBasis, Role, SystemConfig, golden_rule_rate

# Positions this close to a mirror (relative to L) count as on the mirror.
MIRROR_RTOL = 1e-9


class Placement(str, enum.Enum):
    REGULAR = "regular"
    RANDOM_PER_CELL = "random_per_cell"
    STACKED = "stacked"


@dataclass(frozen=True)
class CrystalSpec:
    """A linear crystal of ``atom_count`` identical atoms centred on the emitter.

    ``drop_mirror_atoms`` removes sites that land exactly on a mirror; such
    atoms have identically zero coupling, so the dynamics are unchanged.
    """

    atom_count: int
    lattice_constant: float
    placement: Placement = Placement.REGULAR
    center: float | None = None
    seed: int | None = None
    pin_emitter: bool = True
    drop_mirror_atoms: bool = False

    def __post_init__(self):
        object.__setattr__(self, "placement", Placement(self.placement))
        if self.atom_count < 1:
            raise ConfigError("crystal needs at least one atom")
        if self.lattice_constant < 0:
            raise ConfigError("lattice constant must be non-negative")
        if self.placement is Placement.RANDOM_PER_CELL and self.seed is None:
            raise ConfigError("random_per_cell placement requires a seed")


def child_seed(master_seed: int, index: int) -> int:
    """Seed of ensemble member ``index``: first 64-bit word of SeedSequence([master, index])."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _site_offsets(count: int) -> np.ndarray:
    return np.arange(count) - (count - 1) / 2.0


def crystal_positions(spec: CrystalSpec, cavity_length: float, center: float) -> np.ndarray:
    a = spec.lattice_constant
    offsets = _site_offsets(spec.atom_count)
    if spec.placement is Placement.STACKED or a == 0.0:
        return np.full(spec.atom_count, float(center))
    sites = center + offsets * a
    if spec.placement is Placement.REGULAR:
        return sites
    rng = rng_for(spec.seed)
    lo = np.maximum(sites - a / 2, 0.0)
    hi = np.minimum(sites + a / 2, cavity_length)
    draws = rng.uniform(size=spec.atom_count)
    positions = lo + draws * (hi - lo)
    if spec.pin_emitter:
        positions[spec.atom_count // 2] = center
    return positions


def build_crystal(
    spec: CrystalSpec,
    emitter: AtomSpec,
    modes: ModeBasis,
    coupling_model="broadband",
) -> SystemConfig:
    """Crystal whose central site is the (excited) emitter; all others start in the ground state."""
    if spec.atom_count % 2 == 0:
        raise ConfigError("crystal atom count must be odd so the emitter occupies the central site")
    length = modes.cavity_length
    center = emitter.position if spec.center is None else spec.center
    if not math.isclose(center, emitter.position, rel_tol=0.0, abs_tol=MIRROR_RTOL * length):
        raise ConfigError("emitter must sit at the crystal's central site")
    positions = crystal_positions(spec, length, emitter.position)
    mid = spec.atom_count // 2

    atoms = []
    tol = MIRROR_RTOL * length
    for j, r in enumerate(positions):
        if j == mid:
            atoms.append(replace(emitter, position=float(r), role=Role.EMITTER, initial_excited=True))
            continue
        on_mirror = abs(r) <= tol or abs(r - length) <= tol
        inside = 0.0 < r < length
        if on_mirror and spec.drop_mirror_atoms:
            continue
        if on_mirror or not inside:
            raise ConfigError(
                f"crystal overflows cavity: site {j} at {r!r} not strictly inside (0, {length!r})"
            )
        atoms.append(AtomSpec(float(r), emitter.transition_frequency, emitter.coupling, Role.CRYSTAL, False))
    return SystemConfig(modes, tuple(atoms), coupling_model)


def emitter_index(config: SystemConfig) -> int:
    excited = config.excited_indices()
    if len(excited) != 1:
        raise ConfigError(f"expected exactly one excited atom, found {len(excited)}")
    return excited[0]


@dataclass(frozen=True, eq=False)
class SweepResult:
    offsets: np.ndarray
    times: np.ndarray
    populations: np.ndarray  # (n_offsets, T)


def run_position_sweep(
    base: SystemConfig,
    offsets: Sequence[float],
    times: Sequence[float],
    backend: str = "eig",
    dt: float = DEFAULT_DT,
) -> SweepResult:
    """Shift the emitter by each offset and record its P_e(t)."""
    e = emitter_index(base)
    emitter = base.atoms[e]
    length = base.modes.cavity_length
    rows = []
    for dr in offsets:
        r = emitter.position + dr
        if not 0.0 < r < length:
            raise ConfigError(f"offset {dr!r} moves the emitter to {r!r}, outside (0, {length!r})")
        atoms = list(base.atoms)
        atoms[e] = replace(emitter, position=r)
        cfg = SystemConfig(base.modes, tuple(atoms), base.coupling_model)
        rows.append(propagate(cfg, times, backend, dt).populations(e))
    return SweepResult(np.asarray(offsets, dtype=np.float64), np.asarray(times, dtype=np.float64), np.array(rows))


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    times: np.ndarray
    mean: np.ndarray
    seeds: tuple[int, ...]
    master_seed: int
    members: np.ndarray | None = field(default=None, repr=False)

    @property
    def config_count(self) -> int:
        return len(self.seeds)


def exact_mean(rows: np.ndarray) -> np.ndarray:
    """Column means with correctly rounded sums, independent of row order."""
    rows = np.asarray(rows, dtype=np.float64)
    return np.array([math.fsum(col) for col in rows.T]) / rows.shape[0]


class EnsembleMemberError(CavityError):
    def __init__(self, index: int, seed: int, cause: Exception):
        super().__init__(f"ensemble member {index} (seed {seed}) failed: {cause}")
        self.index = index
        self.seed = seed
        self.cause = cause


def run_ensemble(
    spec: CrystalSpec,
    emitter: AtomSpec,
    modes: ModeBasis,
    n_configs: int,
    times: Sequence[float],
    master_seed: int,
    coupling_model="broadband",
    backend: str = "eig",
    dt: float = DEFAULT_DT,
    threads: int = 1,
    keep_members: bool = False,
    first_index: int = 0,
) -> EnsembleResult:
    """Average the emitter's P_e(t) over random-per-cell crystals.

    Member i uses ``child_seed(master_seed, first_index + i)``; results are
    collected by index, so the thread count never changes the output.
    """
    if n_configs < 1:
        raise ConfigError("n_configs must be at least 1")
    spec = replace(spec, placement=Placement.RANDOM_PER_CELL, seed=0 if spec.seed is None else spec.seed)
    times = np.asarray(times, dtype=np.float64)
    seeds = tuple(child_seed(master_seed, first_index + i) for i in range(n_configs))

    def member(i):
        try:
            cfg = build_crystal(replace(spec, seed=seeds[i]), emitter, modes, coupling_model)
            return propagate(cfg, times, backend, dt).populations(emitter_index(cfg))
        except CavityError as exc:
            raise EnsembleMemberError(first_index + i, seeds[i], exc) from exc

    if threads <= 1:
        rows = [member(i) for i in range(n_configs)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(member, range(n_configs)))
    rows = np.array(rows)
    return EnsembleResult(times, exact_mean(rows), seeds, int(master_seed), rows if keep_members else None)


@dataclass(frozen=True)
class AnalyzerBank:
    """Weakly coupled spectrometer atoms co-located at ``offset`` from the emitter.

    ``span`` is the half-range of the frequency grid in units of the emitter's
    free-space rate.
    """

    count: int = 100
    offset: float = 0.5
    gamma_ratio: float = 1e-4
    span: float = 3.0

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("analyzer bank needs at least one atom")
        if not self.gamma_ratio > 0:
            raise ConfigError("gamma_ratio must be positive; dark analyzers measure nothing")
        if self.gamma_ratio >= 1:
            raise ConfigError("gamma_ratio must be << 1 for a weak measurement")

    @property
    def time_of_flight(self) -> float:
        return abs(self.offset) / SPEED_OF_LIGHT


def analyzer_frequencies(bank: AnalyzerBank, emitter: AtomSpec, cavity_length: float) -> np.ndarray:
    rate = golden_rule_rate(emitter.coupling, cavity_length)
    half = bank.span * rate
    if bank.count == 1:
        return np.array([emitter.transition_frequency])
    return np.linspace(emitter.transition_frequency - half, emitter.transition_frequency + half, bank.count)


def build_analyzer_bank(bank: AnalyzerBank, config: SystemConfig) -> SystemConfig:
    """Append the analyzer atoms (ground state) to an emitter configuration.

    Analyzer couplings are equal and give rate gamma_ratio * Gamma_a through
    the same golden-rule relation as the emitter, i.e. g = g_a sqrt(gamma_ratio).
    """
    emitter = config.atoms[emitter_index(config)]
    length = config.modes.cavity_length
    r = emitter.position + bank.offset
    if not 0.0 < r < length:
        raise ConfigError(f"analyzer bank at {r!r} overlaps a mirror or lies outside (0, {length!r})")
    g = emitter.coupling * math.sqrt(bank.gamma_ratio)
    freqs = analyzer_frequencies(bank, emitter, length)
    analyzers = tuple(AtomSpec(r, float(w), g, Role.ANALYZER, False) for w in freqs)
    return SystemConfig(config.modes, config.atoms + analyzers, config.coupling_model)


def analyzer_spectrum(state, config: SystemConfig, bank: AnalyzerBank) -> tuple[np.ndarray, np.ndarray]:
    """(analyzer frequencies, populations normalised to unit peak) at ``state.time``."""
    idx = config.indices_with_role(Role.ANALYZER)
    if not idx:
        raise ConfigError("configuration has no analyzer atoms")
    freqs = np.array([config.atoms[j].transition_frequency for j in idx])
    pops = np.abs(state.amplitudes[idx]) ** 2
    peak = float(np.max(pops))
    if state.time < bank.time_of_flight or peak == 0.0:
        raise NoSignalError(
            f"no signal yet: t={state.time!r} is before the time of flight {bank.time_of_flight!r}"
        )
    return freqs, pops / peak
