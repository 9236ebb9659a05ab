import numpy as np

from spincontact import config as cfg
from spincontact.dynamics import PhaseADynamics, PhaseBDynamics, _numpy_step_batch
from spincontact.quat import quat_normalize


def test_phase_b_kernel_matches_numpy(params, rng):
    dyn = PhaseBDynamics(params, cfg.OMEGA_REF)
    n = 40
    x = np.concatenate(
        [rng.uniform(-0.8, 0.8, (n, 3)), rng.uniform(-0.5, 0.5, (n, 3)),
         rng.uniform(-0.8, 0.8, (n, 3)), quat_normalize(rng.normal(size=(n, 4)))],
        axis=1,
    )
    u = np.concatenate([rng.uniform(-2, 2, (n, 3)), rng.uniform(-0.3, 0.3, (n, 3))], axis=1)
    out_kernel = dyn.step_batch(x, u, 0.01, 2)
    out_numpy = _numpy_step_batch(dyn, x, u, 0.01, 2)
    assert np.max(np.abs(out_kernel - out_numpy)) <= 1e-12


def test_phase_a_kernel_matches_numpy(params, rng):
    dyn = PhaseADynamics(params, cfg.THETA_0, cfg.OMEGA_REF)
    n = 40
    x = np.concatenate(
        [rng.uniform(-0.5, 0.5, (n, 3)), quat_normalize(rng.normal(size=(n, 4)))], axis=1
    )
    u = rng.uniform(-2, 2, (n, 3))
    out_kernel = dyn.step_batch(x, u, 0.01, 2)
    out_numpy = _numpy_step_batch(dyn, x, u, 0.01, 2)
    assert np.max(np.abs(out_kernel - out_numpy)) <= 1e-13


def test_kernel_quaternion_norms(params, rng):
    dyn = PhaseBDynamics(params, cfg.OMEGA_REF)
    x = np.concatenate(
        [rng.uniform(-0.5, 0.5, (10, 9)), quat_normalize(rng.normal(size=(10, 4)))], axis=1
    )
    u = np.zeros((10, 6))
    out = dyn.step_batch(x, u, 0.01, 2)
    assert np.max(np.abs(np.linalg.norm(out[:, 9:13], axis=1) - 1.0)) <= 1e-12
