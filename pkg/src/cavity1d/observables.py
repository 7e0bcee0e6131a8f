"""Measured quantities: populations, mode spectrum, energy density, overlaps, fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from . import _kernels
from .dynamics import ExcitationState, Propagator, _check_dimension
from .errors import ConfigError
from .model import ModeBasis, SystemConfig, coupling_matrix

DEFAULT_GRID_POINTS = 2048


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or np.any(np.diff(pts) <= 0):
            raise ConfigError("grid points must be a strictly ascending 1-D sequence")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, cavity_length: float, n_points: int = DEFAULT_GRID_POINTS) -> "SpatialGrid":
        pts = np.linspace(0.0, cavity_length, n_points)
        pts[-1] = cavity_length
        return cls(pts)

    @property
    def resolution(self) -> float:
        return float(np.max(np.diff(self.points))) if len(self.points) > 1 else 0.0


@dataclass(frozen=True, eq=False)
class SpectrumRecord:
    """Mode occupations S(n) = |d_n|^2 at one time, one entry per mode."""

    index: np.ndarray
    frequency: np.ndarray
    occupation: np.ndarray
    time: float


def atomic_population(s: ExcitationState, j: int) -> float:
    if not 0 <= j < s.n_atoms:
        raise IndexError(f"atom index {j} out of range for {s.n_atoms} atoms")
    return float(abs(s.amplitudes[j]) ** 2)


def total_atomic_excitation(s: ExcitationState) -> float:
    """R_atoms = sum_j |c_j|^2."""
    return float(np.sum(np.abs(s.atom_amplitudes) ** 2))


def field_spectrum(s: ExcitationState, modes: ModeBasis) -> SpectrumRecord:
    if len(s.mode_amplitudes) != modes.mode_count:
        raise ConfigError("state and mode basis disagree on the number of modes")
    return SpectrumRecord(modes.indices, modes.frequencies, np.abs(s.mode_amplitudes) ** 2, s.time)


def electric_field_amplitude(s: ExcitationState, modes: ModeBasis, grid: SpatialGrid) -> np.ndarray:
    """<E(r)> on the grid.

    <a_n> couples the one- and zero-excitation sectors; states here have no
    zero-excitation component, so the mean field vanishes identically.
    """
    if len(s.mode_amplitudes) != modes.mode_count:
        raise ConfigError("state and mode basis disagree on the number of modes")
    ground_amplitude = 0.0
    weights = np.sqrt(modes.frequencies / modes.cavity_length) * np.conj(ground_amplitude) * s.mode_amplitudes
    return 2.0 * _kernels.field_sum(grid.points, modes.wavenumbers, weights).real


def energy_density(s: ExcitationState, modes: ModeBasis, grid: SpatialGrid) -> np.ndarray:
    """<:E(r)^2:> for a single-excitation state.

    Normal ordering leaves 2 <E^- E^+> = (2/L) |sum_n sqrt(w_n) sin(k_n r) d_n|^2,
    whose integral over the cavity is sum_n w_n |d_n|^2, the field energy.
    """
    if len(s.mode_amplitudes) != modes.mode_count:
        raise ConfigError("state and mode basis disagree on the number of modes")
    weights = np.sqrt(modes.frequencies) * s.mode_amplitudes
    amp = _kernels.field_sum(grid.points, modes.wavenumbers, weights)
    # sin(k_n r) rounds to ~1e-16 at the mirrors; the field has exact nodes there.
    amp[(grid.points <= 0.0) | (grid.points >= modes.cavity_length)] = 0.0
    return (2.0 / modes.cavity_length) * np.abs(amp) ** 2


def overlap_spectrum(p: Propagator, s0: ExcitationState) -> tuple[np.ndarray, np.ndarray]:
    """(E_k, |<psi_0|Phi_k>|^2) for all eigenstates, in ascending energy."""
    _check_dimension(p.dimension, s0)
    proj = p.eigenvectors.T @ s0.amplitudes
    return p.eigenvalues.copy(), np.abs(proj) ** 2


def interacting_modes(config: SystemConfig) -> np.ndarray:
    """Boolean mask of modes with nonzero coupling to at least one atom."""
    return np.any(coupling_matrix(config) != 0.0, axis=0)


def fit_decay_rate(times, populations, window: tuple[float, float]) -> float:
    """Least-squares slope of -ln P over ``window`` (inclusive)."""
    t = np.asarray(times, dtype=np.float64)
    p = np.asarray(populations, dtype=np.float64)
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if not hi > lo or np.count_nonzero(sel) < 2:
        raise ValueError(f"degenerate fit window {window!r}")
    if np.any(p[sel] <= 0):
        raise ValueError("populations must be strictly positive inside the fit window")
    slope = np.polyfit(t[sel], -np.log(p[sel]), 1)[0]
    return float(slope)


def lorentzian(w, center, hwhm, amplitude):
    return amplitude / (1.0 + ((w - center) / hwhm) ** 2)


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    hwhm: float
    amplitude: float

    @property
    def fwhm(self) -> float:
        return 2.0 * self.hwhm


def fit_lorentzian(frequencies, values, center_guess: float, width_guess: float = 1.0) -> LorentzianFit:
    """Least-squares Lorentzian over {center, width, amplitude}, seeded at ``center_guess``."""
    w = np.asarray(frequencies, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    popt, _ = curve_fit(lorentzian, w, y, p0=[center_guess, width_guess, float(np.max(y))], maxfev=20000)
    return LorentzianFit(float(popt[0]), float(abs(popt[1])), float(popt[2]))


def envelope_correlation(x_ref, y_ref, x, y) -> float:
    """Pearson correlation of ``y`` against ``y_ref`` after interpolating onto ``x_ref``.

    Both curves are compared on the reference abscissae; points of ``x_ref``
    outside the range of ``x`` are dropped.
    """
    x_ref = np.asarray(x_ref, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x)
    inside = (x_ref >= x[order][0]) & (x_ref <= x[order][-1])
    y_interp = np.interp(x_ref[inside], x[order], np.asarray(y, dtype=np.float64)[order])
    return float(np.corrcoef(np.asarray(y_ref, dtype=np.float64)[inside], y_interp)[0, 1])


def trapezoid_integral(values, grid: SpatialGrid) -> float:
    return float(np.trapezoid(values, grid.points))
