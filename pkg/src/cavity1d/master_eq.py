"""Time-local decay rate and level shift of the initially excited atom.

For a single excitation the reduced dynamics of the emitter obey a
convolutionless master equation whose only coefficients are

    eta(t) = -2 c1'(t) / c1(t),   Gamma(t) = Re eta,   delta(t) = Im eta.

c1' is taken from the equation of motion, c1' = -i (H x)_1, so no numerical
differencing is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson

from .dynamics import Trajectory
from .errors import ConfigError
from .model import RestrictedHamiltonian

VALIDITY_THRESHOLD = 1e-6


@dataclass(frozen=True, eq=False)
class MasterEqTrace:
    times: np.ndarray
    eta: np.ndarray
    valid: np.ndarray
    emitter_amplitude: np.ndarray
    frame: str = "lab"

    @property
    def gamma(self) -> np.ndarray:
        return np.where(self.valid, self.eta.real, np.nan)

    @property
    def delta(self) -> np.ndarray:
        return np.where(self.valid, self.eta.imag, np.nan)


def reconstruct_eta(
    trajectory: Trajectory,
    hamiltonian: RestrictedHamiltonian,
    emitter: int = 0,
    threshold: float = VALIDITY_THRESHOLD,
    frame: str = "interaction",
) -> MasterEqTrace:
    """eta(t) from a stored trajectory.

    ``frame="interaction"`` removes the free rotation at the emitter's bare
    frequency (see :func:`free_atom_interaction_frame`); ``"lab"`` keeps it.
    """
    if len(trajectory) == 0:
        raise ConfigError("empty trajectory")
    if not 0 <= emitter < hamiltonian.n_atoms:
        raise ConfigError(f"emitter index {emitter} out of range")
    if frame not in ("lab", "interaction"):
        raise ConfigError(f"unknown frame {frame!r}")
    x = trajectory.amplitudes
    c1 = x[:, emitter]
    # (H x)_e; H is real symmetric so its column e equals row e.
    hx = x @ hamiltonian.matrix[:, emitter]
    valid = np.abs(c1) >= threshold
    eta = np.full(len(c1), np.nan + 1j * np.nan)
    eta[valid] = 2j * hx[valid] / c1[valid]
    trace = MasterEqTrace(np.asarray(trajectory.times, dtype=np.float64), eta, valid, c1.copy(), "lab")
    if frame == "interaction":
        trace = free_atom_interaction_frame(trace, float(hamiltonian.atom_frequencies[emitter]))
    return trace


def free_atom_interaction_frame(trace: MasterEqTrace, atom_frequency: float) -> MasterEqTrace:
    """Re-express eta for c1 e^{+i w_a t}.

    With eta = -2 c1'/c1 the free rotation contributes 2 i w_a, so delta drops
    by 2 w_a; gamma is untouched.
    """
    if trace.frame == "interaction":
        return trace
    eta = trace.eta - 2j * atom_frequency
    amp = trace.emitter_amplitude * np.exp(1j * atom_frequency * trace.times)
    return replace(trace, eta=eta, emitter_amplitude=amp, frame="interaction")


def leading_valid_interval(trace: MasterEqTrace) -> slice:
    """Samples from the start up to (not including) the first invalid one."""
    bad = np.flatnonzero(~trace.valid)
    stop = int(bad[0]) if len(bad) else len(trace.valid)
    return slice(0, stop)


def reintegrate_population(trace: MasterEqTrace, initial_population: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Solve dP/dt = -Gamma(t) P over the leading valid interval.

    Returns (times, P). Cumulative Simpson quadrature on the trace's own grid;
    resolve the fastest oscillation of Gamma when choosing the grid.
    """
    sl = leading_valid_interval(trace)
    t = trace.times[sl]
    if len(t) < 3:
        raise ValueError("need at least three valid samples to re-integrate")
    if initial_population is None:
        initial_population = float(abs(trace.emitter_amplitude[0]) ** 2)
    exponent = cumulative_simpson(trace.eta.real[sl], x=t, initial=0.0)
    return t, initial_population * np.exp(-exponent)


def time_average(trace: MasterEqTrace, window: tuple[float, float], part: str = "gamma") -> float:
    """Trapezoid time-average of gamma or delta over ``window``, valid samples only."""
    lo, hi = window
    sel = (trace.times >= lo) & (trace.times <= hi) & trace.valid
    if np.count_nonzero(sel) < 2:
        raise ValueError(f"not enough valid samples in {window!r}")
    values = trace.eta.real if part == "gamma" else trace.eta.imag
    t = trace.times[sel]
    return float(np.trapezoid(values[sel], t) / (t[-1] - t[0]))


def second_order_shift(hamiltonian: RestrictedHamiltonian, emitter: int = 0) -> float:
    """sum_n g_n^2 / (w_a - w_n) over non-resonant modes: perturbative level shift."""
    wa = hamiltonian.atom_frequencies[emitter]
    g = hamiltonian.couplings[emitter]
    det = wa - hamiltonian.mode_frequencies
    ok = det != 0.0
    return float(np.sum(g[ok] ** 2 / det[ok]))
