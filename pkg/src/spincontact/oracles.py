"""Independent validation oracles for the multibody dynamics.

These deliberately avoid the reduced/Schur code paths: accelerations come
from solving the unreduced 12-dimensional system directly, and the kinetic
energy from per-body velocity composition.  Used by the test suite and the
`validate-dynamics` CLI subcommand.
"""

from __future__ import annotations

import numpy as np

from . import multibody as mb
from .params import SatelliteParams


def full_accelerations_free(theta, theta_dot, omega_b, tau_m, tau_r, p: SatelliteParams):
    """Solve H [v_B_dot, w_dot, th_dd, phi_dd] = [0, 0, tau_m, tau_r] - c.

    v_B is reconstructed from zero linear momentum so both routes evaluate
    the nonlinear terms at the same point.
    """
    h = mb.h_matrix(theta, p)
    c = mb.coriolis_full(theta, theta_dot, omega_b, p)
    tau = np.zeros(c.shape)
    tau[..., 6:9] = tau_m
    tau[..., 9:12] = tau_r
    acc = np.linalg.solve(h, (tau - c)[..., None])[..., 0]
    return acc[..., 0:3], acc[..., 3:6], acc[..., 6:9], acc[..., 9:12]


def full_accelerations_locked(theta, omega_b, tau_r, p: SatelliteParams):
    """Locked-arm variant: theta_dd = 0 enforced, joint rows dropped.

    Unknowns are [v_B_dot, w_dot, phi_dd]; the joint lock supplies whatever
    constraint torque the dropped rows require.
    """
    h = mb.h_matrix(theta, p)
    zeros = np.zeros_like(np.asarray(omega_b, dtype=float))
    c = mb.coriolis_full(theta, zeros, omega_b, p)
    keep = np.r_[0:6, 9:12]
    h_red = h[..., keep[:, None], keep[None, :]]
    tau = np.zeros(c.shape[:-1] + (9,))
    tau[..., 6:9] = tau_r
    acc = np.linalg.solve(h_red, (tau - c[..., keep])[..., None])[..., 0]
    return acc[..., 0:3], acc[..., 3:6], acc[..., 6:9]


def kinetic_energy_per_body(w, theta, p: SatelliteParams):
    """K = sum_i (v_i^T m_i v_i + w_i^T I_i w_i) from composed velocities."""
    w = np.asarray(w, dtype=float)
    v_b, omega, theta_dot, phi_dot = w[..., 0:3], w[..., 3:6], w[..., 6:9], w[..., 9:12]
    coms = mb.com_positions(theta, p)
    j_l, j_a = mb.link_jacobians(theta, p)
    i_links = mb.link_inertias(theta, p)
    masses = p.masses

    total = masses[0] * np.sum(v_b * v_b, axis=-1)
    total = total + np.einsum("...a,ab,...b->...", omega, p.i_b, omega)
    for i in range(3):
        v_rel = (j_l[..., i, :, :] @ theta_dot[..., None])[..., 0]
        v_hat = v_rel + v_b + np.cross(omega, coms[..., 1 + i, :])
        w_hat = (j_a[..., i, :, :] @ theta_dot[..., None])[..., 0] + omega
        total = total + masses[1 + i] * np.sum(v_hat * v_hat, axis=-1)
        total = total + np.einsum("...a,...ab,...b->...", w_hat, i_links[..., i, :, :], w_hat)
    i_wheels = p.wheel_inertias
    r_wheels = p.wheel_coms
    for k in range(3):
        v_hat = v_b + np.cross(omega, np.broadcast_to(r_wheels[k], v_b.shape))
        w_hat = omega.copy()
        w_hat = w_hat + phi_dot[..., k, None] * np.eye(3)[k]
        total = total + p.m_rw * np.sum(v_hat * v_hat, axis=-1)
        total = total + np.einsum("...a,ab,...b->...", w_hat, i_wheels[k], w_hat)
    return total


def momenta(w, theta, p: SatelliteParams):
    """Linear and angular momentum rows of the model, P = dK/dv_B etc."""
    blocks = mb.inertia_blocks(theta, p)
    w = np.asarray(w, dtype=float)
    v_b, omega, theta_dot, phi_dot = w[..., 0:3], w[..., 3:6], w[..., 6:9], w[..., 9:12]

    def mv(mat, vec):
        return (mat @ vec[..., None])[..., 0]

    lin = p.m_total * v_b + mv(blocks.H_VO, omega) + mv(blocks.H_Vth, theta_dot)
    ang = (
        mv(np.swapaxes(blocks.H_VO, -1, -2), v_b)
        + mv(blocks.H_O, omega)
        + mv(blocks.H_Oth, theta_dot)
        + mv(blocks.H_OPhi, phi_dot)
    )
    return lin, ang


def free_drift_derivative(ext_state, p: SatelliteParams):
    """Time derivative of [theta, omega, theta_dot, q, phi_dot] with zero torques."""
    theta = ext_state[..., 0:3]
    omega = ext_state[..., 3:6]
    theta_dot = ext_state[..., 6:9]
    zeros3 = np.zeros_like(theta)
    omega_dot, theta_dd = mb.coupled_dynamics_B(ext_state[..., 0:13], zeros3, zeros3, p)
    blocks = mb.inertia_blocks(theta, p)
    dyn = mb.generalized_matrices(blocks)
    _, _, c_r = mb.coriolis_terms(theta, theta_dot, omega, p, blocks=blocks)
    phi_dd = mb.wheel_acceleration(omega_dot, zeros3, c_r, dyn)
    from .quat import quat_derivative

    q_dot = quat_derivative(ext_state[..., 9:13], omega)  # torque-free: spin in place
    return np.concatenate([theta_dot, omega_dot, theta_dd, q_dot, phi_dd], axis=-1)


def validate_reduction(p: SatelliteParams, n_samples=100, seed=0, free=True):
    """Max |reduced - unreduced| acceleration residual over random samples."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        theta = rng.uniform(0.0, 2.0 * np.pi, 3)
        omega = rng.uniform(-0.5, 0.5, 3)
        tau_r = rng.uniform(-2.0, 2.0, 3)
        if free:
            theta_dot = rng.uniform(-0.8, 0.8, 3)
            tau_m = rng.uniform(-0.3, 0.3, 3)
            state = np.concatenate([theta, omega, theta_dot, [0, 0, 0, 1]])
            w_dot, th_dd = mb.coupled_dynamics_B(state, tau_r, tau_m, p)
            _, w_dot_o, th_dd_o, _ = full_accelerations_free(
                theta, theta_dot, omega, tau_m, tau_r, p
            )
            res = max(np.max(np.abs(w_dot - w_dot_o)), np.max(np.abs(th_dd - th_dd_o)))
        else:
            q = np.array([0.0, 0.0, 0.0, 1.0])
            w_dot = mb.reduced_dynamics_A(omega, q, theta, tau_r, p)
            _, w_dot_o, _ = full_accelerations_locked(theta, omega, tau_r, p)
            res = np.max(np.abs(w_dot - w_dot_o))
        worst = max(worst, float(res))
    return worst


def energy_drift_free_float(p: SatelliteParams, t_final=10.0, dt=0.01, seed=0):
    """Relative kinetic-energy drift of a torque-free RK4 simulation."""
    from .integrate import rk4_step
    from .quat import quat_normalize

    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, 3)
    state = np.concatenate(
        [theta, rng.uniform(-0.2, 0.2, 3), rng.uniform(-0.3, 0.3, 3), [0, 0, 0, 1],
         rng.uniform(-1.0, 1.0, 3)]
    )

    def energy(s):
        v_b = mb.base_velocity_from_momentum(s[0:3], s[6:9], s[3:6], p)
        w = np.concatenate([v_b, s[3:6], s[6:9], s[13:16]])
        return mb.kinetic_energy(w, s[0:3], p)

    k0 = energy(state)
    n_steps = int(round(t_final / dt))
    max_drift = 0.0
    for _ in range(n_steps):
        state = rk4_step(lambda s, u: free_drift_derivative(s, p), state, None, dt)
        state[9:13] = quat_normalize(state[9:13])
        max_drift = max(max_drift, abs(energy(state) - k0) / abs(k0))
    return max_drift
