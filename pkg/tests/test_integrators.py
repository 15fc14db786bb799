"""Time integration: RK4, Crank-Nicolson, recording, blow-up handling."""

import numpy as np
import pytest
import scipy.sparse as sp

from rombox import (CrankNicolsonStepper, IntegratorSpec, StateVector,
                    crank_nicolson_prepare, integrate, rk4_step)
from rombox.errors import ConfigError, FactorizationError


def test_spec_requires_commensurate_horizon():
    IntegratorSpec(dt=0.1, t_end=1.0)
    with pytest.raises(ConfigError):
        IntegratorSpec(dt=0.3, t_end=1.0)
    with pytest.raises(ConfigError):
        IntegratorSpec(dt=0.1, t_end=1.0, scheme="euler")
    with pytest.raises(ConfigError):
        IntegratorSpec(dt=0.1, t_end=1.0, snapshot_stride=0)


def test_rk4_step_is_fourth_order_on_linear_decay():
    # one step of u' = -u from 1: error vs exp(-dt) shrinks ~16x per halving
    def rhs(u):
        return -u

    errs = []
    for dt in (0.1, 0.05):
        u1 = rk4_step(rhs, np.array([1.0]), dt)
        errs.append(abs(u1[0] - np.exp(-dt)))
    assert 14.0 < errs[0] / errs[1] < 40.0


def test_trajectory_records_initial_state_and_stride():
    A = sp.csr_matrix(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    spec = IntegratorSpec(dt=0.01, t_end=1.0, snapshot_stride=25)
    traj = integrate(A, StateVector(np.array([1.0, 0.0]), 0.0), spec)
    assert traj.times[0] == 0.0
    assert np.allclose(np.diff(traj.times), 0.25)
    assert traj.states.shape == (5, 2)
    assert traj.stable
    # rotation: u(t) = (cos t, -sin t)
    assert np.allclose(traj.final.values, [np.cos(1.0), -np.sin(1.0)],
                       atol=1e-9)


def test_callable_and_matrix_rhs_agree():
    A = sp.random(12, 12, density=0.4, random_state=7, format="csr")
    A = A - A.T
    u0 = StateVector(np.random.default_rng(3).standard_normal(12), 0.0)
    spec = IntegratorSpec(dt=0.02, t_end=0.5, snapshot_stride=5)
    dense = A.toarray()
    t_mat = integrate(A, u0, spec)
    t_fun = integrate(lambda u: dense @ u, u0, spec)
    assert np.allclose(t_mat.states, t_fun.states, rtol=1e-12, atol=1e-14)


def test_blowup_truncates_and_flags():
    A = sp.csr_matrix(np.array([[80.0]]))
    spec = IntegratorSpec(dt=0.5, t_end=50.0, snapshot_stride=1)
    traj = integrate(A, StateVector(np.array([1.0]), 0.0), spec)
    assert not traj.stable
    assert traj.times.size < 101


def test_crank_nicolson_solves_linear_system_exactly():
    rng = np.random.default_rng(11)
    B = rng.standard_normal((6, 6))
    B = B - B.T
    dt = 0.05
    stepper = crank_nicolson_prepare(sp.csr_matrix(B), dt)
    a0 = rng.standard_normal(6)
    a1 = stepper.step(a0)
    lhs = (np.eye(6) - dt / 2 * B) @ a1
    rhs = (np.eye(6) + dt / 2 * B) @ a0
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_crank_nicolson_conserves_energy_for_skew_systems():
    rng = np.random.default_rng(5)
    B = rng.standard_normal((8, 8))
    B = B - B.T
    stepper = crank_nicolson_prepare(sp.csr_matrix(B), 0.1)
    spec = IntegratorSpec(dt=0.1, t_end=20.0, scheme="crank_nicolson",
                          snapshot_stride=10)
    traj = stepper.integrate(StateVector(rng.standard_normal(8), 0.0), spec)
    norms = np.linalg.norm(traj.states, axis=1)
    assert np.allclose(norms, norms[0], rtol=1e-12)


def test_crank_nicolson_with_gram_matrix_matches_dense_solve():
    rng = np.random.default_rng(4)
    B = rng.standard_normal((5, 5))
    B = B - B.T
    M = rng.standard_normal((5, 5))
    G = M @ M.T + 5.0 * np.eye(5)
    dt = 0.1
    stepper = CrankNicolsonStepper(sp.csr_matrix(B), dt, gram_matrix=G)
    a0 = rng.standard_normal(5)
    a1 = stepper.step(a0)
    expect = np.linalg.solve(G - dt / 2 * B, (G + dt / 2 * B) @ a0)
    assert np.allclose(a1, expect, atol=1e-12)


def test_singular_implicit_matrix_is_reported():
    # (I - dt/2 B) singular for B = (2/dt) I
    dt = 0.5
    B = sp.identity(3, format="csr") * (2.0 / dt)
    with pytest.raises(FactorizationError):
        crank_nicolson_prepare(B, dt)
