"""Baseline feedback/feedforward PID controllers for both mission phases.

The attitude loop commands a base angular acceleration -u_att built from
proportional/integral/derivative action on the relative quaternion vector
part and the relative angular velocity; the torque realizing it is the
computed-torque law tau_r = c_tilde_b - M_tilde_b u_att.  The arm loop in
the contact phase commands theta_dd = u_arm (tracking PID plus reference
acceleration feedforward) through the coupled block law.  Derivatives are
backward differences of the measured signals; integrals are rectangle-rule
accumulators from phase start with anti-windup clamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config as cfg
from .dynamics import PhaseADynamics, PhaseBDynamics
from .quat import relative_angular_velocity


def ziegler_nichols(k_cr, t_cr):
    """Closed-loop tuning formulas: (0.6 k_cr, 1.2 k_cr / T_cr, 0.075 k_cr T_cr)."""
    if k_cr <= 0.0 or t_cr <= 0.0:
        raise ValueError("critical gain and period must be positive")
    return 0.6 * k_cr, 1.2 * k_cr / t_cr, 0.075 * k_cr * t_cr


@dataclass(frozen=True)
class PidGains:
    k_q: float = cfg.PID_GAINS["k_q"]
    k_omega: float = cfg.PID_GAINS["k_omega"]
    k_iq: float = cfg.PID_GAINS["k_iq"]
    k_iomega: float = cfg.PID_GAINS["k_iomega"]
    k_dq: float = cfg.PID_GAINS["k_dq"]
    k_domega: float = cfg.PID_GAINS["k_domega"]
    k_p: float = cfg.PID_GAINS["k_p"]
    k_i: float = cfg.PID_GAINS["k_i"]
    k_d: float = cfg.PID_GAINS["k_d"]

    def __post_init__(self):
        if any(getattr(self, f.name) < 0.0 for f in self.__dataclass_fields__.values()):
            raise ValueError("PID gains must be non-negative")


@dataclass
class PidState:
    """Integral accumulators and previous samples for derivative estimation.

    Anti-windup is conditional integration: the step's accumulation is rolled
    back whenever the commanded torque saturates, and the accumulators are
    additionally clamped so their contribution stays at the scale of the
    achievable acceleration.
    """

    int_q: np.ndarray = field(default_factory=lambda: np.zeros(3))
    int_omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    int_theta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_qv: np.ndarray = None
    prev_omega_rel: np.ndarray = None
    clamp: float = 1.0

    def reset(self):
        self.int_q[:] = 0.0
        self.int_omega[:] = 0.0
        self.int_theta[:] = 0.0
        self.prev_qv = None
        self.prev_omega_rel = None

    def _accumulate(self, acc, err, dt):
        acc += err * dt
        np.clip(acc, -self.clamp, self.clamp, out=acc)

    def _rollback(self, acc, err, dt):
        acc -= err * dt
        np.clip(acc, -self.clamp, self.clamp, out=acc)


def _attitude_command(q_rel, omega_rel, pid: PidState, gains: PidGains, dt):
    qv = np.asarray(q_rel, dtype=float)[0:3]
    dqv = np.zeros(3) if pid.prev_qv is None else (qv - pid.prev_qv) / dt
    dw = np.zeros(3) if pid.prev_omega_rel is None else (omega_rel - pid.prev_omega_rel) / dt
    pid._accumulate(pid.int_q, qv, dt)
    pid._accumulate(pid.int_omega, omega_rel, dt)
    pid.prev_qv = qv.copy()
    pid.prev_omega_rel = np.asarray(omega_rel, dtype=float).copy()
    return (
        gains.k_q * qv
        + gains.k_omega * omega_rel
        + gains.k_iq * pid.int_q
        + gains.k_iomega * pid.int_omega
        + gains.k_dq * dqv
        + gains.k_domega * dw
    )


def pid_control_A(state, pid: PidState, gains: PidGains, dyn: PhaseADynamics, dt):
    """Wheel torque for spin synchronization (pre-saturation).

    Computed-torque form of tau_r = c_tilde_b - M_tilde_b u_att, realized
    through the robust reduced matrices: the commanded base acceleration
    -u_att is mapped to wheel torque by inverting the torque channel.  The
    locked-arm nonlinear terms are identically zero in this model, leaving
    tau_r = B_eff^-1 M_hat_b (-u_att).
    """
    state = np.asarray(state, dtype=float)
    omega_b, q_rel = state[0:3], state[3:7]
    omega_rel = relative_angular_velocity(omega_b, dyn.omega_s, q_rel / np.linalg.norm(q_rel))
    u_att = _attitude_command(q_rel, omega_rel, pid, gains, dt)
    gendyn = dyn.dyn  # locked-arm matrices precomputed at construction
    tau_r = np.linalg.solve(gendyn.B_eff, gendyn.M_hat_b @ (-u_att))
    if np.any(np.abs(tau_r) > cfg.PHASE_A_U_MAX):
        pid._rollback(pid.int_q, q_rel[0:3], dt)
        pid._rollback(pid.int_omega, omega_rel, dt)
    return tau_r


def pid_control_B(state, pid: PidState, gains: PidGains, refs, dyn: PhaseBDynamics, dt):
    """(tau_r, tau_m) for the contact phase (pre-saturation).

    refs is (theta_ref, theta_dot_ref, theta_dd_ref) at the current time.
    The arm command is theta_dd_des = u_arm (tracking PID plus feedforward);
    the published block law carries a sign inconsistency in the arm column,
    so the torques are obtained by inverting the coupled dynamics for the
    commanded accelerations [-u_att; +u_arm], which reduces to the same
    computed-torque structure with a stabilizing arm loop.
    """
    state = np.asarray(state, dtype=float)
    theta, omega_b, theta_dot, q_rel = state[0:3], state[3:6], state[6:9], state[9:13]
    theta_ref, theta_dot_ref, theta_dd_ref = refs
    omega_rel = relative_angular_velocity(omega_b, dyn.omega_s, q_rel / np.linalg.norm(q_rel))
    u_att = _attitude_command(q_rel, omega_rel, pid, gains, dt)

    err = np.asarray(theta_ref, dtype=float) - theta
    pid._accumulate(pid.int_theta, err, dt)
    u_arm = (
        gains.k_p * err
        + gains.k_i * pid.int_theta
        + gains.k_d * (np.asarray(theta_dot_ref, dtype=float) - theta_dot)
        + np.asarray(theta_dd_ref, dtype=float)
    )

    gendyn = dyn.reduced_terms(theta, omega_b, theta_dot)
    acc = np.concatenate([-u_att, u_arm])
    m_top = gendyn.M_hat_b @ acc[0:3] + gendyn.M_bm @ acc[3:6]
    m_bot = gendyn.M_bm.T @ acc[0:3] + gendyn.M_m @ acc[3:6]
    tau_r = np.linalg.solve(gendyn.B_eff, m_top + gendyn.c_b) + gendyn.c_r
    tau_m = m_bot + gendyn.c_m
    if np.any(np.abs(tau_r) > cfg.PHASE_B_U_MAX[0:3]):
        pid._rollback(pid.int_q, q_rel[0:3], dt)
        pid._rollback(pid.int_omega, omega_rel, dt)
    if np.any(np.abs(tau_m) > cfg.PHASE_B_U_MAX[3:6]):
        pid._rollback(pid.int_theta, err, dt)
    return tau_r, tau_m
