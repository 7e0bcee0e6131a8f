"""Canned datasets for the reference figure set, parameters fixed.

All figures share the reference cavity: L = 2 pi, omega_a = 100, g_a^2 = 1/2,
cutoff 200, which gives Gamma_a = pi and lambda_a = L / 50.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .dynamics import diagonalize, evolve_eig, initial_state, propagate
from .errors import ConfigError
from .master_eq import reconstruct_eta
from .model import AtomSpec, Role, SystemConfig, build_hamiltonian, build_modes, single_atom_config
from .observables import SpatialGrid, energy_density, field_spectrum, overlap_spectrum
from .runner import fmt, write_manifest, write_table
from .scenarios import (
    AnalyzerBank,
    CrystalSpec,
    Placement,
    analyzer_spectrum,
    build_analyzer_bank,
    build_crystal,
    emitter_index,
    run_ensemble,
)

FIGURES = ("1", "2", "3", "4", "5", "6", "7", "7b", "8")

LENGTH = 2 * math.pi
OMEGA_A = 100.0
COUPLING_SQ = 0.5
CUTOFF = 200.0
LAMBDA_A = 2 * math.pi / OMEGA_A


def _times(t_max=4 * math.pi, n=2001):
    return np.linspace(0.0, t_max, n)


def _modes():
    return build_modes(LENGTH, CUTOFF)


def _emitter(position=LENGTH / 2):
    return AtomSpec(position, OMEGA_A, math.sqrt(COUPLING_SQ), Role.EMITTER, True)


def regular_crystal(count: int, lattice: float) -> SystemConfig:
    spec = CrystalSpec(count, lattice, Placement.REGULAR, drop_mirror_atoms=True)
    return build_crystal(spec, _emitter(), _modes())


def _emitter_population(system, times):
    return propagate(system, times).populations(emitter_index(system))


def figure_1(out, **_):
    times = _times(4 * math.pi, 4001)
    cols = {"t": times}
    for label, dr in [("0", 0.0), ("lambda/16", LAMBDA_A / 16), ("lambda/8", LAMBDA_A / 8), ("lambda/4", LAMBDA_A / 4)]:
        cols[f"P_e(dr={label})"] = _emitter_population(single_atom_config(position=LENGTH / 2 + dr), times)
    return [write_table(out / "fig1_decay.csv", cols, {"figure": "1"})]


def figure_2(out, **_):
    system = single_atom_config()
    grid = SpatialGrid.uniform(LENGTH)
    snap_times = [0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, math.pi, 4.0, 5.0, 6.0, 2 * math.pi]
    snap = propagate(system, snap_times)
    cols = {"r": grid.points}
    for state in snap:
        cols[f"I(t={fmt(state.time)})"] = energy_density(state, system.modes, grid)
    return [write_table(out / "fig2_energy_density.csv", cols, {"figure": "2"})]


def figure_3(out, **_):
    """Emitter close to a mirror: sub-wavelength distances and the one-wavelength interference cases."""
    times = _times(4 * math.pi, 4001)
    cols = {"t": times, "P_e(center)": _emitter_population(single_atom_config(), times)}
    positions = [
        ("lambda/2", LAMBDA_A / 2), ("lambda/4", LAMBDA_A / 4), ("lambda/8", LAMBDA_A / 8),
        ("lambda/16", LAMBDA_A / 16), ("lambda/32", LAMBDA_A / 32), ("lambda", LAMBDA_A),
        ("lambda+lambda/4", 1.25 * LAMBDA_A), ("lambda+lambda/8", 1.125 * LAMBDA_A),
    ]
    for label, r in positions:
        cols[f"P_e(r={label})"] = _emitter_population(single_atom_config(position=r), times)
    return [write_table(out / "fig3_mirror.csv", cols, {"figure": "3"})]


_LATTICES = [("lambda/2", LAMBDA_A / 2), ("lambda/4", LAMBDA_A / 4), ("lambda/8", LAMBDA_A / 8), ("lambda/16", LAMBDA_A / 16), ("0", 0.0)]


def figure_4(out, **_):
    times = _times()
    cols = {"t": times, "P_e(M=1)": _emitter_population(single_atom_config(), times)}
    for label, a in _LATTICES:
        cols[f"P_e(a={label})"] = _emitter_population(regular_crystal(101, a), times)
    return [write_table(out / "fig4_crystal.csv", cols, {"figure": "4", "atoms": 101})]


def figure_5(out, seed=0, threads=1, n_configs=100, **_):
    times = _times()
    cols = {"t": times, "P_e(M=1)": _emitter_population(single_atom_config(), times)}
    for label, a in _LATTICES[:3]:
        cols[f"P_e(regular a={label})"] = _emitter_population(regular_crystal(101, a), times)
        spec = CrystalSpec(101, a, Placement.RANDOM_PER_CELL, seed=0, drop_mirror_atoms=True)
        res = run_ensemble(spec, _emitter(), _modes(), n_configs, times, seed, threads=threads)
        cols[f"P_e(random <a>={label})"] = res.mean
    meta = {"figure": "5", "n_configs": n_configs, "master_seed": seed}
    return [write_table(out / "fig5_random.csv", cols, meta)]


def figure_6(out, **_):
    times = _times()
    cols = {"t": times}
    for label, a in _LATTICES:
        traj = propagate(regular_crystal(101, a), times)
        cols[f"R_atoms(M=101 a={label})"] = traj.populations().sum(axis=1)
    for m in (11, 21):
        traj = propagate(regular_crystal(m, LAMBDA_A / 4), times)
        cols[f"R_atoms(M={m} a=lambda/4)"] = traj.populations().sum(axis=1)
    return [write_table(out / "fig6_r_atoms.csv", cols, {"figure": "6"})]


def figure_7(out, **_):
    system = single_atom_config()
    h = build_hamiltonian(system)
    p = diagonalize(h)
    s0 = initial_state(system)
    snap = evolve_eig(p, s0, [0.3, 0.7, 1.0, 3.0])
    cols = {"n": system.modes.indices, "omega": system.modes.frequencies}
    for state in snap:
        cols[f"S(t={fmt(state.time)})"] = field_spectrum(state, system.modes).occupation
    energies, overlaps = overlap_spectrum(p, s0)
    return [
        write_table(out / "fig7_spectrum.csv", cols, {"figure": "7"}),
        write_table(out / "fig7_overlap.csv", {"E": energies, "S_e": overlaps}, {"figure": "7"}),
    ]


def analyzer_setup(count=100, gamma_ratio=1e-4, offset=0.5, span=3.0):
    bank = AnalyzerBank(count, offset, gamma_ratio, span)
    return bank, build_analyzer_bank(bank, single_atom_config())


def figure_7b(out, **_):
    bank, system = analyzer_setup()
    p = diagonalize(build_hamiltonian(system))
    s0 = initial_state(system)
    t_f = bank.time_of_flight
    cols_a, cols_m = {}, {"n": system.modes.indices, "omega": system.modes.frequencies}
    for t in (0.3, 2.0):
        late, early = evolve_eig(p, s0, [t + t_f])[0], evolve_eig(p, s0, [t])[0]
        freqs, spec = analyzer_spectrum(late, system, bank)
        cols_a.setdefault("omega", freqs)
        cols_a[f"P_norm(t={fmt(t)}+t_f)"] = spec
        cols_m[f"S(t={fmt(t)})"] = field_spectrum(early, system.modes).occupation
    meta = {"figure": "7b", "time_of_flight": fmt(t_f), "gamma_ratio": fmt(bank.gamma_ratio)}
    return [
        write_table(out / "fig7b_analyzer.csv", cols_a, meta),
        write_table(out / "fig7b_modes.csv", cols_m, meta),
    ]


def figure_8(out, **_):
    times = np.linspace(0.0, 4 * math.pi, 12567)
    cols = {"t": times}
    for label, system in [("single", single_atom_config()), ("crystal M=101 a=lambda/8", regular_crystal(101, LAMBDA_A / 8))]:
        h = build_hamiltonian(system)
        traj = evolve_eig(diagonalize(h), initial_state(system), times)
        trace = reconstruct_eta(traj, h, emitter_index(system))
        cols[f"Gamma({label})"] = trace.gamma
        cols[f"valid({label})"] = trace.valid
    return [write_table(out / "fig8_gamma.csv", cols, {"figure": "8", "Gamma_a": fmt(math.pi)})]


_BUILDERS = {
    "1": figure_1, "2": figure_2, "3": figure_3, "4": figure_4, "5": figure_5,
    "6": figure_6, "7": figure_7, "7b": figure_7b, "8": figure_8,
}


def reproduce_figure(figure: str, out_dir, seed: int = 0, threads: int = 1) -> list[Path]:
    figure = str(figure)
    if figure not in _BUILDERS:
        raise ConfigError(f"unknown figure {figure!r}; expected one of {', '.join(FIGURES)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = _BUILDERS[figure](out, seed=seed, threads=threads)
    extra = {"figure": figure, "seed": seed, "command": f"cavity1d reproduce-figure {figure} --seed {seed}"}
    return outputs + [write_manifest(out, None, outputs, extra)]
