"""Hot loops, compiled with numba when available.

Set ``CAVITY1D_DISABLE_NUMBA=1`` to force the pure-numpy paths. Both variants
of each kernel stay importable (``*_numba`` / ``*_numpy``) so they can be
compared directly; the unsuffixed names point at the active one.
"""

import os

import numpy as np

_DISABLED = os.environ.get("CAVITY1D_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by CAVITY1D_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


def _derivative_numpy(atom_freq, mode_freq, coupling, x, n_atoms):
    xa = x[:n_atoms]
    xm = x[n_atoms:]
    out = np.empty_like(x)
    # dx/dt = -i H x, with H = [[diag(wa), -G], [-G^T, diag(wm)]]
    out[:n_atoms] = -1j * (atom_freq * xa - coupling @ xm)
    out[n_atoms:] = -1j * (mode_freq * xm - coupling.T @ xa)
    return out


def rk4_advance_numpy(atom_freq, mode_freq, coupling, x0, h, n_steps):
    """Advance ``x0`` by ``n_steps`` classic RK4 steps of size ``h``."""
    n_atoms = atom_freq.shape[0]
    x = x0.astype(np.complex128, copy=True)
    for _ in range(n_steps):
        k1 = _derivative_numpy(atom_freq, mode_freq, coupling, x, n_atoms)
        k2 = _derivative_numpy(atom_freq, mode_freq, coupling, x + 0.5 * h * k1, n_atoms)
        k3 = _derivative_numpy(atom_freq, mode_freq, coupling, x + 0.5 * h * k2, n_atoms)
        k4 = _derivative_numpy(atom_freq, mode_freq, coupling, x + h * k3, n_atoms)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def field_sum_numpy(points, wavenumbers, weights):
    """``sum_n weights[n] * sin(k_n r)`` for every grid point ``r``."""
    return np.sin(np.outer(points, wavenumbers)) @ weights


if HAVE_NUMBA:

    @njit(cache=True)
    def _derivative_nb(atom_freq, mode_freq, coupling, x, out):
        m = atom_freq.shape[0]
        n = mode_freq.shape[0]
        for j in range(m):
            acc = atom_freq[j] * x[j]
            for k in range(n):
                acc -= coupling[j, k] * x[m + k]
            out[j] = -1j * acc
        for k in range(n):
            acc = mode_freq[k] * x[m + k]
            for j in range(m):
                acc -= coupling[j, k] * x[j]
            out[m + k] = -1j * acc

    @njit(cache=True)
    def rk4_advance_numba(atom_freq, mode_freq, coupling, x0, h, n_steps):
        dim = x0.shape[0]
        x = x0.copy()
        k1 = np.empty(dim, np.complex128)
        k2 = np.empty(dim, np.complex128)
        k3 = np.empty(dim, np.complex128)
        k4 = np.empty(dim, np.complex128)
        tmp = np.empty(dim, np.complex128)
        for _ in range(n_steps):
            _derivative_nb(atom_freq, mode_freq, coupling, x, k1)
            for i in range(dim):
                tmp[i] = x[i] + 0.5 * h * k1[i]
            _derivative_nb(atom_freq, mode_freq, coupling, tmp, k2)
            for i in range(dim):
                tmp[i] = x[i] + 0.5 * h * k2[i]
            _derivative_nb(atom_freq, mode_freq, coupling, tmp, k3)
            for i in range(dim):
                tmp[i] = x[i] + h * k3[i]
            _derivative_nb(atom_freq, mode_freq, coupling, tmp, k4)
            for i in range(dim):
                x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        return x

    @njit(cache=True)
    def field_sum_numba(points, wavenumbers, weights):
        out = np.zeros(points.shape[0], np.complex128)
        for i in range(points.shape[0]):
            acc = 0j
            for k in range(wavenumbers.shape[0]):
                acc += weights[k] * np.sin(wavenumbers[k] * points[i])
            out[i] = acc
        return out

else:
    rk4_advance_numba = None
    field_sum_numba = None


def rk4_advance(atom_freq, mode_freq, coupling, x0, h, n_steps):
    args = (
        np.ascontiguousarray(atom_freq, dtype=np.float64),
        np.ascontiguousarray(mode_freq, dtype=np.float64),
        np.ascontiguousarray(coupling, dtype=np.float64).reshape(len(atom_freq), len(mode_freq)),
        np.ascontiguousarray(x0, dtype=np.complex128),
        float(h),
        int(n_steps),
    )
    if USE_NUMBA:
        return rk4_advance_numba(*args)
    return rk4_advance_numpy(*args)


def field_sum(points, wavenumbers, weights):
    args = (
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(wavenumbers, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.complex128),
    )
    if USE_NUMBA:
        return field_sum_numba(*args)
    return field_sum_numpy(*args)
