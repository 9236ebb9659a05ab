"""Phase dynamics wrappers used by the plant, the NMPC, and the PID.

Phase A state: [omega_B (3), q_rel (4)]; control: tau_r (3).
Phase B state: [theta (3), omega_B (3), theta_dot (3), q_rel (4)];
control: [tau_r (3), tau_m (3)].

Both classes evaluate the reduced equations of motion in batch.  Phase B
shares one inertia-block evaluation between the nominal configuration and
the six finite-difference perturbations that feed the nonlinear terms,
which keeps the per-call cost flat in batch size.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as kernels
from . import multibody as mb
from .errors import NonFiniteState, SingularInertia
from .params import SatelliteParams
from .quat import quat_derivative, quat_normalize, rotation_matrix


def _omega_rel(omega_b, q_rel, omega_s):
    a = rotation_matrix(q_rel, check=False)
    return omega_b - (a @ np.broadcast_to(omega_s, omega_b.shape)[..., None])[..., 0]


class PhaseADynamics:
    """Spin-synchronization dynamics with the arm locked at theta_lock.

    With zero joint rates the model's nonlinear terms vanish in the base
    row, so the angular-velocity channel is linear: w_dot = G tau_r with
    G = M_hat_b^-1 B_eff precomputed once.
    """

    nx = 7
    nu = 3
    quat_slice = slice(3, 7)

    def __init__(self, params: SatelliteParams, theta_lock, omega_s):
        self.params = params
        self.theta_lock = np.asarray(theta_lock, dtype=float)
        self.omega_s = np.asarray(omega_s, dtype=float)
        blocks = mb.inertia_blocks(self.theta_lock, params)
        dyn = mb.generalized_matrices(blocks)
        if np.linalg.cond(dyn.M_hat_b) > 1e12:
            raise SingularInertia("locked-arm reduced inertia is ill-conditioned")
        self.gain = np.linalg.solve(dyn.M_hat_b, dyn.B_eff)
        self.dyn = dyn

    def f(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        omega = x[..., 0:3]
        q = x[..., 3:7]
        omega_dot = (self.gain @ u[..., None])[..., 0]
        q_dot = quat_derivative(q, _omega_rel(omega, q, self.omega_s))
        return np.concatenate([omega_dot, q_dot], axis=-1)

    def normalize(self, x):
        out = np.array(x, dtype=float, copy=True)
        out[..., 3:7] = quat_normalize(out[..., 3:7])
        return out

    def step_batch(self, x, u, dt, substeps):
        """Advance a batch of states one held-control interval."""
        if kernels.HAVE_NUMBA:
            x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=float)))
            u = np.ascontiguousarray(np.atleast_2d(np.asarray(u, dtype=float)))
            out = kernels.step_batch_a(x, u, float(dt), int(substeps), self.omega_s, self.gain)
            if not np.all(np.isfinite(out)):
                raise NonFiniteState("non-finite state after batched step")
            return out
        return _numpy_step_batch(self, x, u, dt, substeps)  # pragma: no cover


def _numpy_step_batch(dyn, x, u, dt, substeps):
    x = np.array(np.atleast_2d(np.asarray(x, dtype=float)), copy=True)
    u = np.atleast_2d(np.asarray(u, dtype=float))
    h = dt / substeps
    for _ in range(substeps):
        k1 = dyn.f(x, u)
        k2 = dyn.f(x + 0.5 * h * k1, u)
        k3 = dyn.f(x + 0.5 * h * k2, u)
        k4 = dyn.f(x + h * k3, u)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if dyn.quat_slice is not None:
            x[..., dyn.quat_slice] = quat_normalize(x[..., dyn.quat_slice])
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("non-finite state after batched step")
    return x


class CallableDynamics:
    """Adapter turning a plain vector field f(x, u) into a dynamics object."""

    def __init__(self, nx, nu, f, quat_slice=None):
        self.nx = nx
        self.nu = nu
        self._f = f
        self.quat_slice = quat_slice

    def f(self, x, u):
        return self._f(x, u)

    def step_batch(self, x, u, dt, substeps):
        return _numpy_step_batch(self, x, u, dt, substeps)


class PhaseBDynamics:
    """Coupled base/arm dynamics for the contact phase."""

    nx = 13
    nu = 6
    quat_slice = slice(9, 13)

    def __init__(self, params: SatelliteParams, omega_s):
        self.params = params
        self.omega_s = np.asarray(omega_s, dtype=float)
        h_o_phi, h_phi, h_vo_w, h_o_w = mb._wheel_constants(params)
        self.b_eff = -h_o_phi @ np.linalg.inv(h_phi)
        self._m_br = h_o_phi
        self._m_r_inv = np.linalg.inv(h_phi)
        # constant argument pack for the fused numba step kernel
        self._kernel_args = (
            self.omega_s,
            np.asarray(params.m_links, dtype=float),
            np.asarray(params.lengths, dtype=float),
            params.link_inertia_principal,
            params.arm_mount,
            params.i_b,
            h_vo_w,
            h_o_w,
            self.b_eff,
            h_o_phi @ np.linalg.inv(h_phi) @ h_o_phi.T,
            params.m_total,
        )

    def config(self, theta):
        """Configuration-dependent data: inertia blocks and their derivatives."""
        theta = np.asarray(theta, dtype=float)
        return mb.inertia_blocks(theta, self.params), mb.block_derivatives(theta, self.params)

    def accelerations(self, theta, omega, theta_dot, u, cfg=None):
        if cfg is None:
            cfg = self.config(theta)
        blocks, dblocks = cfg
        dyn = mb.generalized_matrices(blocks)
        c_b, c_m, c_r = mb.coriolis_terms(
            theta, theta_dot, omega, self.params, blocks=blocks, dblocks=dblocks
        )
        tau_r, tau_m = u[..., 0:3], u[..., 3:6]
        batch = np.broadcast_shapes(theta.shape[:-1], u.shape[:-1])
        a = np.zeros(batch + (6, 6))
        a[..., 0:3, 0:3] = dyn.M_hat_b
        a[..., 0:3, 3:6] = dyn.M_bm
        a[..., 3:6, 0:3] = np.swapaxes(dyn.M_bm, -1, -2)
        a[..., 3:6, 3:6] = dyn.M_m
        top = (self.b_eff @ (tau_r - c_r)[..., None])[..., 0] - c_b
        rhs = np.concatenate([top, tau_m - c_m], axis=-1)
        try:
            acc = np.linalg.solve(a, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:  # pragma: no cover - nominal params never trigger
            raise SingularInertia("coupled inertia matrix is singular") from exc
        return acc[..., 0:3], acc[..., 3:6]

    def f(self, x, u, cfg=None):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        theta = x[..., 0:3]
        omega = x[..., 3:6]
        theta_dot = x[..., 6:9]
        q = x[..., 9:13]
        omega_dot, theta_dd = self.accelerations(theta, omega, theta_dot, u, cfg=cfg)
        q_dot = quat_derivative(q, _omega_rel(omega, q, self.omega_s))
        return np.concatenate([theta_dot, omega_dot, theta_dd, q_dot], axis=-1)

    def normalize(self, x):
        out = np.array(x, dtype=float, copy=True)
        out[..., 9:13] = quat_normalize(out[..., 9:13])
        return out

    def reduced_terms(self, theta, omega, theta_dot):
        """(M blocks, c terms) at one configuration; used by the PID laws."""
        blocks, dblocks = self.config(theta)
        dyn = mb.generalized_matrices(blocks)
        dyn.c_b, dyn.c_m, dyn.c_r = mb.coriolis_terms(
            theta, theta_dot, omega, self.params, blocks=blocks, dblocks=dblocks
        )
        return dyn

    def step_batch(self, x, u, dt, substeps):
        """Advance a batch of states one held-control interval (fused kernel)."""
        x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=float)))
        u = np.ascontiguousarray(np.atleast_2d(np.asarray(u, dtype=float)))
        if kernels.HAVE_NUMBA:
            out = kernels.step_batch(x, u, float(dt), int(substeps), *self._kernel_args)
        else:  # pragma: no cover - slow reference fallback
            from .integrate import IntegratorSpec, step_interval

            spec = IntegratorSpec(dt=dt, substeps=substeps)
            out = np.stack([step_interval(self, xi.copy(), ui, spec) for xi, ui in zip(x, u)])
        if not np.all(np.isfinite(out)):
            raise NonFiniteState("non-finite state after batched step")
        return out
