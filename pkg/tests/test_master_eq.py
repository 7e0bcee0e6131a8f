import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity1d.dynamics import Trajectory, diagonalize, evolve_eig, initial_state
from cavity1d.errors import ConfigError
from cavity1d.master_eq import (
    MasterEqTrace,
    free_atom_interaction_frame,
    leading_valid_interval,
    reconstruct_eta,
    reintegrate_population,
    second_order_shift,
    time_average,
)
from cavity1d.model import build_hamiltonian, single_atom_config


def trace_for(cfg, times, frame="interaction"):
    h = build_hamiltonian(cfg)
    traj = evolve_eig(diagonalize(h), initial_state(cfg), times)
    return reconstruct_eta(traj, h, 0, frame=frame), h


def synthetic(gamma, delta, w):
    t = np.linspace(0, 2, 2001)
    c1 = np.exp(-(gamma / 2 + 1j * (w + delta / 2)) * t)
    eta = np.full(len(t), gamma + 1j * (2 * w + delta))
    return MasterEqTrace(t, eta, np.ones(len(t), bool), c1, "lab")


@settings(max_examples=30, deadline=None)
@given(gamma=st.floats(0.1, 5.0), delta=st.floats(-3.0, 3.0), w=st.floats(1.0, 100.0))
def test_frame_covariance(gamma, delta, w):
    lab = synthetic(gamma, delta, w)
    inter = free_atom_interaction_frame(lab, w)
    np.testing.assert_array_equal(inter.gamma, lab.gamma)
    np.testing.assert_allclose(inter.delta, delta, atol=1e-10 * w)
    assert free_atom_interaction_frame(inter, w) is inter


@settings(max_examples=20, deadline=None)
@given(gamma=st.floats(0.1, 5.0), delta=st.floats(-3.0, 3.0))
def test_reintegration_recovers_synthetic_exponential(gamma, delta):
    tr = free_atom_interaction_frame(synthetic(gamma, delta, 10.0), 10.0)
    t, p = reintegrate_population(tr)
    np.testing.assert_allclose(p, np.exp(-gamma * t), rtol=1e-12)
    assert time_average(tr, (0.2, 1.5)) == pytest.approx(gamma)
    assert time_average(tr, (0.2, 1.5), part="delta") == pytest.approx(delta, abs=1e-9)


def test_lab_frame_rate_matches_interaction_frame():
    cfg = single_atom_config(cutoff_frequency=40.0, transition_frequency=20.0)
    t = np.linspace(0, 1, 101)
    lab, _ = trace_for(cfg, t, "lab")
    inter, _ = trace_for(cfg, t)
    np.testing.assert_array_equal(lab.gamma, inter.gamma)
    np.testing.assert_allclose(lab.delta - inter.delta, 40.0, atol=1e-9)


def test_invalid_samples_are_masked():
    t = np.linspace(0, 1, 5)
    amps = np.zeros((5, 2), complex)
    amps[:, 0] = [1.0, 0.5, 1e-9, 0.5, 0.2]
    amps[:, 1] = 0.1
    cfg = single_atom_config(cavity_length=math.pi / 2, cutoff_frequency=2.0, transition_frequency=2.0)
    h = build_hamiltonian(cfg)
    tr = reconstruct_eta(Trajectory(t, amps, 1), h, frame="lab")
    assert tr.valid.tolist() == [True, True, False, True, True]
    assert math.isnan(tr.gamma[2]) and math.isnan(tr.delta[2])
    assert leading_valid_interval(tr) == slice(0, 2)


def test_bad_arguments():
    cfg = single_atom_config(cutoff_frequency=10.0, transition_frequency=5.0)
    h = build_hamiltonian(cfg)
    traj = evolve_eig(diagonalize(h), initial_state(cfg), [0.0, 0.1])
    with pytest.raises(ConfigError):
        reconstruct_eta(traj, h, emitter=3)
    with pytest.raises(ConfigError):
        reconstruct_eta(traj, h, frame="rotating")


def test_symmetric_cutoff_gives_no_shift():
    tr, _ = trace_for(single_atom_config(), np.linspace(0, 1.5, 1501))
    assert abs(time_average(tr, (0.2, 1.5), part="delta")) < 1e-9


def test_asymmetric_cutoff_shift_follows_perturbation_theory():
    cfg = single_atom_config(cutoff_frequency=150.0)
    tr, h = trace_for(cfg, np.linspace(0, 1.5, 3001))
    measured = time_average(tr, (0.2, 1.5), part="delta")
    # eta carries a factor 2 relative to the amplitude's frequency shift.
    predicted = 2 * second_order_shift(h)
    assert predicted > 0
    assert np.sign(measured) == np.sign(predicted)
    assert measured == pytest.approx(predicted, rel=0.1)


def test_reintegration_reproduces_population():
    cfg = single_atom_config()
    t = np.linspace(0, 4 * math.pi, 12567)
    tr, _ = trace_for(cfg, t)
    tt, p = reintegrate_population(tr)
    direct = np.abs(tr.emitter_amplitude[: len(tt)]) ** 2
    assert np.max(np.abs(p - direct)) < 1e-6
