"""Time evolution of single-excitation amplitudes.

Two independent backends: exact propagation through the eigendecomposition of
the restricted Hamiltonian (default), and fixed-step classic RK4. They are
used as oracles for one another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from . import _kernels
from .errors import ConfigError, EigensolverError, StabilityError
from .model import RestrictedHamiltonian, SystemConfig, build_hamiltonian

DEFAULT_DT = 1e-4
NORM_DRIFT_LIMIT = 1e-4
# RK4 stability region on the imaginary axis ends at 2*sqrt(2).
_RK4_STABILITY = 2 * math.sqrt(2)
# Eigen-propagation is done in chunks of output times to bound memory.
_TIME_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class ExcitationState:
    """Amplitudes (c_1..c_M, d_1..d_N) at one instant."""

    amplitudes: np.ndarray
    n_atoms: int
    time: float = 0.0

    @property
    def atom_amplitudes(self) -> np.ndarray:
        return self.amplitudes[: self.n_atoms]

    @property
    def mode_amplitudes(self) -> np.ndarray:
        return self.amplitudes[self.n_atoms :]

    @property
    def dimension(self) -> int:
        return len(self.amplitudes)

    def norm(self) -> float:
        """Sum of squared moduli; equals the excitation number <R> in this sector."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True, eq=False)
class Trajectory(Sequence):
    """Amplitudes sampled on a time grid; indexable as ExcitationState objects."""

    times: np.ndarray
    amplitudes: np.ndarray  # shape (T, M + N)
    n_atoms: int

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trajectory(self.times[i], self.amplitudes[i], self.n_atoms)
        return ExcitationState(self.amplitudes[i], self.n_atoms, float(self.times[i]))

    def populations(self, j: int | None = None) -> np.ndarray:
        """|c_j(t)|^2, or all atomic populations with shape (T, M)."""
        if j is None:
            return np.abs(self.amplitudes[:, : self.n_atoms]) ** 2
        if not 0 <= j < self.n_atoms:
            raise IndexError(f"atom index {j} out of range for {self.n_atoms} atoms")
        return np.abs(self.amplitudes[:, j]) ** 2

    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)


@dataclass(frozen=True, eq=False)
class Propagator:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    hamiltonian: RestrictedHamiltonian

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)


def initial_state(config: SystemConfig) -> ExcitationState:
    excited = config.excited_indices()
    if len(excited) != 1:
        raise ConfigError(
            f"exactly one atom must be initially excited, found {len(excited)}"
        )
    x = np.zeros(config.dimension, dtype=np.complex128)
    x[excited[0]] = 1.0
    return ExcitationState(x, config.n_atoms, 0.0)


def _connected_slots(h: np.ndarray) -> np.ndarray:
    off = h.copy()
    np.fill_diagonal(off, 0.0)
    return np.any(off != 0.0, axis=1)


def diagonalize(h: RestrictedHamiltonian) -> Propagator:
    """Eigendecomposition with eigenvalues in ascending order.

    Slots with no off-diagonal coupling (e.g. even modes for a central atom)
    are exact eigenvectors; they are split off so they stay exactly decoupled
    rather than picking up round-off mixing from the dense solver.
    """
    mat = h.matrix
    if not np.all(np.isfinite(mat)):
        raise EigensolverError("Hamiltonian contains non-finite entries")
    dim = mat.shape[0]
    coupled = np.flatnonzero(_connected_slots(mat))
    free = np.flatnonzero(~_connected_slots(mat))

    values = np.empty(dim)
    vectors = np.zeros((dim, dim))
    values[: len(free)] = np.diag(mat)[free]
    vectors[free, np.arange(len(free))] = 1.0
    if len(coupled):
        try:
            ev, evec = np.linalg.eigh(mat[np.ix_(coupled, coupled)])
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(f"eigensolver failed: {exc}") from exc
        values[len(free) :] = ev
        vectors[np.ix_(coupled, np.arange(len(free), dim))] = evec

    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    values.setflags(write=False)
    vectors.setflags(write=False)
    return Propagator(values, vectors, h)


def _check_dimension(dim: int, s0: ExcitationState) -> None:
    if s0.dimension != dim:
        raise ConfigError(f"state dimension {s0.dimension} does not match Hamiltonian dimension {dim}")


def evolve_eig(p: Propagator, s0: ExcitationState, times: Sequence[float]) -> Trajectory:
    """x(t) = Phi exp(-i E (t - t0)) Phi^T x0, evaluated at each requested time."""
    _check_dimension(p.dimension, s0)
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    coeff = p.eigenvectors.T @ s0.amplitudes
    out = np.empty((len(times), p.dimension), dtype=np.complex128)
    for lo in range(0, len(times), _TIME_CHUNK):
        dt = times[lo : lo + _TIME_CHUNK] - s0.time
        phases = np.exp(-1j * np.outer(dt, p.eigenvalues))
        out[lo : lo + _TIME_CHUNK] = (phases * coeff) @ p.eigenvectors.T
    out[times == s0.time] = s0.amplitudes
    return Trajectory(times, out, s0.n_atoms)


def evolve_rk(
    h: RestrictedHamiltonian,
    s0: ExcitationState,
    times: Sequence[float],
    dt: float = DEFAULT_DT,
) -> Trajectory:
    """Integrate i dx/dt = H x with classic RK4.

    Each interval between requested times is split into the fewest equal steps
    not exceeding ``dt``, so output times are hit exactly.
    """
    _check_dimension(h.dimension, s0)
    if not dt > 0:
        raise ConfigError(f"step must be positive, got {dt!r}")
    if dt * h.norm_bound() >= _RK4_STABILITY:
        raise StabilityError(
            f"dt * |H| = {dt * h.norm_bound():.3g} outside the RK4 stability region"
        )
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    if np.any(np.diff(times) < 0) or (len(times) and times[0] < s0.time):
        raise ConfigError("output times must be ascending and not before the initial state")

    norm0 = s0.norm()
    out = np.empty((len(times), h.dimension), dtype=np.complex128)
    x = s0.amplitudes.astype(np.complex128)
    t = s0.time
    for i, target in enumerate(times):
        span = target - t
        if span > 0:
            n_steps = math.ceil(span / dt * (1 - 1e-12))
            x = _kernels.rk4_advance(h.atom_frequencies, h.mode_frequencies, h.couplings, x, span / n_steps, n_steps)
            t = target
            drift = abs(float(np.vdot(x, x).real) - norm0)
            if not drift <= NORM_DRIFT_LIMIT:
                raise StabilityError(f"norm drift {drift:.3g} at t={t:.6g} exceeds {NORM_DRIFT_LIMIT}")
        out[i] = x
    return Trajectory(times, out, s0.n_atoms)


def propagate(
    config: SystemConfig,
    times: Sequence[float],
    backend: str = "eig",
    dt: float = DEFAULT_DT,
) -> Trajectory:
    """Build, initialise and evolve ``config`` in one call."""
    h = build_hamiltonian(config)
    s0 = initial_state(config)
    if backend == "eig":
        return evolve_eig(diagonalize(h), s0, times)
    if backend == "rk":
        return evolve_rk(h, s0, times, dt)
    raise ConfigError(f"unknown backend {backend!r}; expected 'eig' or 'rk'")


def energy(h: RestrictedHamiltonian, traj: Trajectory) -> np.ndarray:
    """<H> along a trajectory."""
    hx = h.apply(traj.amplitudes)
    return np.einsum("ti,ti->t", traj.amplitudes.conj(), hx).real
