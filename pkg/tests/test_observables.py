import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity1d.dynamics import diagonalize, evolve_eig, initial_state, propagate
from cavity1d.errors import ConfigError
from cavity1d.model import build_hamiltonian, single_atom_config
from cavity1d.observables import (
    SpatialGrid,
    atomic_population,
    electric_field_amplitude,
    energy_density,
    envelope_correlation,
    field_spectrum,
    fit_decay_rate,
    fit_lorentzian,
    interacting_modes,
    lorentzian,
    overlap_spectrum,
    total_atomic_excitation,
    trapezoid_integral,
)


@pytest.fixture(scope="module")
def small():
    cfg = single_atom_config(cutoff_frequency=20.0, transition_frequency=10.0, position=2.0)
    p = diagonalize(build_hamiltonian(cfg))
    return cfg, p


def test_energy_density_integrates_to_field_energy(small):
    cfg, p = small
    state = evolve_eig(p, initial_state(cfg), [1.3])[0]
    grid = SpatialGrid.uniform(cfg.modes.cavity_length, 8193)
    dens = energy_density(state, cfg.modes, grid)
    expected = float(np.sum(cfg.modes.frequencies * np.abs(state.mode_amplitudes) ** 2))
    assert trapezoid_integral(dens, grid) == pytest.approx(expected, rel=1e-10)
    assert dens[0] == 0.0 and dens[-1] == 0.0
    assert np.all(dens >= 0)


def test_mean_field_vanishes(small):
    cfg, p = small
    state = evolve_eig(p, initial_state(cfg), [0.7])[0]
    grid = SpatialGrid.uniform(cfg.modes.cavity_length, 64)
    assert np.all(electric_field_amplitude(state, cfg.modes, grid) == 0.0)


def test_populations_partition_unity(small):
    cfg, p = small
    state = evolve_eig(p, initial_state(cfg), [0.9])[0]
    field = field_spectrum(state, cfg.modes).occupation.sum()
    assert atomic_population(state, 0) == total_atomic_excitation(state)
    assert total_atomic_excitation(state) + field == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(IndexError):
        atomic_population(state, 1)


def test_even_modes_stay_empty_for_central_atom():
    cfg = single_atom_config()
    state = propagate(cfg, [3.0])[0]
    occ = field_spectrum(state, cfg.modes).occupation
    assert np.all(occ[1::2] == 0.0)
    assert not np.any(interacting_modes(cfg)[1::2])


def test_overlap_spectrum_sums_to_one(small):
    cfg, p = small
    e, s = overlap_spectrum(p, initial_state(cfg))
    assert np.all(np.diff(e) >= 0)
    assert s.sum() == pytest.approx(1.0, abs=1e-13)


def test_grid_validation():
    with pytest.raises(ConfigError):
        SpatialGrid(np.array([0.0, 0.0, 1.0]))
    g = SpatialGrid.uniform(2.0, 5)
    assert g.points[-1] == 2.0 and g.resolution == pytest.approx(0.5)


@settings(max_examples=30, deadline=None)
@given(rate=st.floats(0.1, 10.0), shift=st.floats(-2.0, 2.0))
def test_fit_decay_rate_recovers_exponential(rate, shift):
    t = np.linspace(0, 2, 201)
    p = math.exp(shift) * np.exp(-rate * t)
    assert fit_decay_rate(t, p, (0.2, 1.5)) == pytest.approx(rate, rel=1e-9)


def test_fit_decay_rate_rejects_bad_input():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        fit_decay_rate(t, np.ones_like(t), (0.5, 0.5))
    with pytest.raises(ValueError):
        fit_decay_rate(t, np.zeros_like(t), (0.0, 1.0))


@settings(max_examples=20, deadline=None)
@given(center=st.floats(95, 105), hwhm=st.floats(0.5, 4.0), amp=st.floats(0.1, 10.0))
def test_lorentzian_fit_roundtrip(center, hwhm, amp):
    w = np.linspace(80, 120, 401)
    fit = fit_lorentzian(w, lorentzian(w, center, hwhm, amp), 100.0, 1.0)
    assert fit.center == pytest.approx(center, abs=1e-6)
    assert fit.hwhm == pytest.approx(hwhm, rel=1e-6)
    assert fit.fwhm == pytest.approx(2 * hwhm, rel=1e-6)


def test_envelope_correlation_identity_and_interpolation():
    x = np.linspace(0, 1, 50)
    y = np.exp(-((x - 0.4) ** 2) / 0.02)
    assert envelope_correlation(x, y, x, y) == pytest.approx(1.0)
    xf = np.linspace(-0.1, 1.1, 500)
    assert envelope_correlation(x, y, xf, np.exp(-((xf - 0.4) ** 2) / 0.02)) > 0.999


def test_constant_population_has_zero_rate():
    t = np.linspace(0, 2, 21)
    assert fit_decay_rate(t, np.ones_like(t), (0.2, 1.5)) == pytest.approx(0.0, abs=1e-12)


def test_wave_packets_have_sharp_fronts():
    cfg = single_atom_config()
    grid = SpatialGrid.uniform(cfg.modes.cavity_length)
    state = propagate(cfg, [1.0])[0]
    dens = energy_density(state, cfg.modes, grid)
    r = grid.points
    peak = dens.max()
    inside = np.abs(r - math.pi) < 1.0 - 0.05
    ahead = np.abs(r - math.pi) > 1.0 + 0.05
    # Packets spread from the centre at c = 1: bright just behind r = L/2 +- t, dark ahead.
    assert dens[ahead].max() < 1e-2 * peak
    front = np.abs(np.abs(r - math.pi) - 1.0) < 0.05
    assert dens[front].max() == peak
    assert dens[inside].max() < peak


def test_packets_meet_at_centre_on_recurrence():
    cfg = single_atom_config()
    grid = SpatialGrid.uniform(cfg.modes.cavity_length)
    dens = energy_density(propagate(cfg, [2 * math.pi + 0.3])[0], cfg.modes, grid)
    assert abs(grid.points[np.argmax(dens)] - math.pi) < 0.35


def test_overlap_vanishes_on_decoupled_eigenstates():
    cfg = single_atom_config()
    p = diagonalize(build_hamiltonian(cfg))
    e, s = overlap_spectrum(p, initial_state(cfg))
    even_slots = 1 + np.flatnonzero(cfg.modes.indices % 2 == 0)
    on_even = np.any(p.eigenvectors[even_slots] != 0.0, axis=0)
    assert np.count_nonzero(on_even) == 200
    assert np.all(s[on_even] == 0.0)
    assert s.sum() == pytest.approx(1.0)


def test_overlap_of_a_bare_mode_is_a_delta():
    from cavity1d.dynamics import ExcitationState
    from cavity1d.model import SystemConfig, build_modes

    modes = build_modes(2 * math.pi, 4.0)
    p = diagonalize(build_hamiltonian(SystemConfig(modes, ())))
    amps = np.zeros(modes.mode_count, complex)
    amps[3] = 1.0
    _, s = overlap_spectrum(p, ExcitationState(amps, 0, 0.0))
    np.testing.assert_array_equal(s, np.eye(modes.mode_count)[3])
