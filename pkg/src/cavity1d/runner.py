"""Run configured experiments and write analysis-ready tables."""

from __future__ import annotations

import dataclasses
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, to_text
from .dynamics import DEFAULT_DT, diagonalize, evolve_eig, evolve_rk, initial_state, propagate
from .master_eq import reconstruct_eta
from .model import AtomSpec, Role, SystemConfig, build_hamiltonian, build_modes
from .observables import SpatialGrid, energy_density, field_spectrum, overlap_spectrum
from .scenarios import (
    AnalyzerBank,
    CrystalSpec,
    Placement,
    analyzer_spectrum,
    build_analyzer_bank,
    build_crystal,
    emitter_index,
    run_ensemble,
    run_position_sweep,
)


def fmt(x) -> str:
    """17 significant digits: exact double round trip."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_table(columns: dict, meta: dict | None = None) -> str:
    """'#'-prefixed metadata, one comma-separated header line, then rows."""
    lines = [f"# cavity1d {__version__}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key} = {value}")
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n_rows = len(arrays[0]) if arrays else 0
    if any(len(a) != n_rows for a in arrays):
        raise ValueError("all table columns must have the same length")
    lines.append(",".join(names))
    for i in range(n_rows):
        lines.append(",".join(fmt(a[i]) for a in arrays))
    return "\n".join(lines) + "\n"


def write_table(path: Path, columns: dict, meta: dict | None = None) -> Path:
    atomic_write(path, format_table(columns, meta))
    return Path(path)


def read_table(path: Path) -> tuple[dict, dict]:
    """Inverse of :func:`write_table` -> (columns, meta)."""
    meta, header, rows = {}, None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            if "=" in line:
                k, v = line[1:].split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        if header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}, meta


def write_manifest(out_dir: Path, cfg: ExperimentConfig | None, outputs: list[Path], extra: dict | None = None) -> Path:
    """Resolved config plus a [manifest] block; feeding it back to ``run`` regenerates the outputs."""
    text = to_text(cfg) if cfg is not None else ""
    lines = (["", "[manifest]"] if text else ["[manifest]"]) + [f"version = {__version__}"]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    lines.append("outputs = " + ", ".join(sorted(p.name for p in outputs)))
    path = Path(out_dir) / "manifest.ini"
    atomic_write(path, text + "\n".join(lines) + "\n")
    return path


# -- building systems from a config ------------------------------------------


def emitter_atom(cfg: ExperimentConfig) -> AtomSpec:
    return AtomSpec(cfg.position, cfg.frequency, math.sqrt(cfg.coupling_sq), Role.EMITTER, True)


def crystal_spec(cfg: ExperimentConfig, placement=None, seed=None) -> CrystalSpec:
    return CrystalSpec(
        cfg.count,
        cfg.lattice,
        Placement(placement or cfg.placement),
        seed=seed,
        pin_emitter=cfg.pin_emitter,
        drop_mirror_atoms=cfg.drop_mirror_atoms,
    )


def system_for(cfg: ExperimentConfig) -> SystemConfig:
    modes = build_modes(cfg.length, cfg.cutoff)
    emitter = emitter_atom(cfg)
    if cfg.count == 1:
        return SystemConfig(modes, (emitter,), cfg.coupling_model)
    placement = cfg.placement
    seed = cfg.seed if placement == "random_per_cell" else None
    return build_crystal(crystal_spec(cfg, placement, seed), emitter, modes, cfg.coupling_model)


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    meta = {"kind": cfg.kind, "backend": cfg.backend}
    meta.update(extra)
    return meta


# -- experiment kinds ----------------------------------------------------------


def _run_decay(cfg, out):
    system = system_for(cfg)
    times = cfg.times()
    traj = propagate(system, times, cfg.backend, cfg.dt)
    e = emitter_index(system)
    outputs = [write_table(out / "decay.csv", {"t": times, "P_e": traj.populations(e)}, _meta(cfg))]
    if cfg.density_times:
        grid = SpatialGrid.uniform(cfg.length, cfg.grid_points)
        snap = propagate(system, sorted(cfg.density_times), cfg.backend, cfg.dt)
        cols = {"r": grid.points}
        for state in snap:
            cols[f"I(t={fmt(state.time)})"] = energy_density(state, system.modes, grid)
        outputs.append(write_table(out / "energy_density.csv", cols, _meta(cfg)))
    return outputs


def _run_sweep(cfg, out):
    system = system_for(cfg)
    times = cfg.times()
    res = run_position_sweep(system, cfg.offsets, times, cfg.backend, cfg.dt)
    cols = {"t": times}
    for dr, row in zip(res.offsets, res.populations):
        cols[f"P_e(dr={fmt(dr)})"] = row
    return [write_table(out / "sweep.csv", cols, _meta(cfg, wavelength=fmt(cfg.wavelength)))]


def _run_crystal(cfg, out):
    system = system_for(cfg)
    times = cfg.times()
    traj = propagate(system, times, cfg.backend, cfg.dt)
    e = emitter_index(system)
    pops = traj.populations()
    cols = {"t": times, "P_e": pops[:, e], "R_atoms": pops.sum(axis=1)}
    meta = _meta(cfg, atoms=system.n_atoms, lattice=fmt(cfg.lattice), placement=cfg.placement)
    return [write_table(out / "crystal.csv", cols, meta)]


def _run_ensemble(cfg, out, threads=1):
    modes = build_modes(cfg.length, cfg.cutoff)
    spec = crystal_spec(cfg, Placement.RANDOM_PER_CELL, seed=cfg.seed)
    res = run_ensemble(
        spec, emitter_atom(cfg), modes, cfg.n_configs, cfg.times(), cfg.seed,
        cfg.coupling_model, cfg.backend, cfg.dt, threads=threads,
    )
    meta = _meta(cfg, n_configs=cfg.n_configs, master_seed=cfg.seed, lattice=fmt(cfg.lattice))
    return [
        write_table(out / "ensemble.csv", {"t": res.times, "P_e_mean": res.mean}, meta),
        write_table(
            out / "ensemble_seeds.csv",
            {"index": np.arange(len(res.seeds)), "seed": np.array(res.seeds, dtype=np.uint64)},
            {"master_seed": cfg.seed, "rule": "SeedSequence([master_seed, index]).generate_state(1, uint64)[0]"},
        ),
    ]


def _run_spectrum(cfg, out):
    system = system_for(cfg)
    h = build_hamiltonian(system)
    s0 = initial_state(system)
    snap = _states(h, s0, sorted(cfg.spectrum_times), cfg)
    cols = {"n": system.modes.indices, "omega": system.modes.frequencies}
    for state in snap:
        cols[f"S(t={fmt(state.time)})"] = field_spectrum(state, system.modes).occupation
    energies, overlaps = overlap_spectrum(diagonalize(h), s0)
    return [
        write_table(out / "spectrum.csv", cols, _meta(cfg)),
        write_table(out / "overlap.csv", {"E": energies, "S_e": overlaps}, _meta(cfg)),
    ]


def _states(h, s0, times, cfg):
    if cfg.backend == "eig":
        return evolve_eig(diagonalize(h), s0, times)
    return evolve_rk(h, s0, times, cfg.dt)


def _run_analyzer(cfg, out):
    base = system_for(cfg)
    bank = AnalyzerBank(cfg.analyzer_count, cfg.analyzer_offset, cfg.gamma_ratio, cfg.span)
    system = build_analyzer_bank(bank, base)
    h = build_hamiltonian(system)
    t_read = cfg.readout_time
    snap = _states(h, initial_state(system), [t_read, t_read + bank.time_of_flight], cfg)
    freqs, spectrum = analyzer_spectrum(snap[1], system, bank)
    modes = field_spectrum(snap[0], system.modes)
    meta = _meta(cfg, time_of_flight=fmt(bank.time_of_flight), readout_time=fmt(t_read))
    return [
        write_table(out / "analyzer.csv", {"omega": freqs, "P_norm": spectrum}, meta),
        write_table(out / "mode_spectrum.csv", {"n": modes.index, "omega": modes.frequency, "S": modes.occupation}, meta),
    ]


def _run_master_eq(cfg, out):
    system = system_for(cfg)
    h = build_hamiltonian(system)
    traj = _states(h, initial_state(system), cfg.times(), cfg)
    trace = reconstruct_eta(traj, h, emitter_index(system), cfg.threshold, cfg.frame)
    cols = {"t": trace.times, "Gamma": trace.gamma, "delta": trace.delta, "valid": trace.valid}
    return [write_table(out / "master_eq.csv", cols, _meta(cfg, frame=cfg.frame, threshold=fmt(cfg.threshold)))]


_RUNNERS = {
    "decay": _run_decay,
    "sweep": _run_sweep,
    "crystal": _run_crystal,
    "ensemble": _run_ensemble,
    "spectrum": _run_spectrum,
    "analyzer": _run_analyzer,
    "master-eq": _run_master_eq,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None, threads: int = 1) -> list[Path]:
    """Run one experiment; returns the written paths (data files then manifest)."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "ensemble":
        outputs = _run_ensemble(cfg, out, threads=threads)
    else:
        outputs = _RUNNERS[cfg.kind](cfg, out)
    extra = {"seed": cfg.seed} if cfg.kind == "ensemble" else {}
    resolved = dataclasses.replace(cfg, out=str(out))
    return outputs + [write_manifest(out, resolved, outputs, extra)]


__all__ = ["run_experiment", "write_table", "read_table", "format_table", "system_for", "DEFAULT_DT"]
