import copy

import numpy as np
import pytest

from spincontact import config as cfg
from spincontact.dynamics import CallableDynamics, PhaseADynamics
from spincontact.errors import InvalidWeights
from spincontact.ocp import OcpSpec, build_ocp_A, build_ocp_B
from spincontact.quat import quat_derivative, quat_normalize, skew
from spincontact.reference import SplineRef
from spincontact.sqp import MpcController, SqpSettings, SqpSolver, linearize_dynamics


def lqr_spec():
    a_c = np.array([[0.0, 1.0], [-0.5, -0.2]])
    b_c = np.array([[0.0], [1.0]])
    dyn = CallableDynamics(2, 1, lambda x, u: x @ a_c.T + u @ b_c.T)
    n, horizon = 40, 0.4
    spec = OcpSpec(
        phase="A", dynamics=dyn, reference=lambda t0: np.zeros((n + 1, 2)),
        q_diag=[3.0, 1.5], r_diag=[0.7], w_e_diag=[5.0, 2.0],
        x_min=-1e9 * np.ones(2), x_max=1e9 * np.ones(2),
        u_min=-1e9 * np.ones(1), u_max=1e9 * np.ones(1),
        n_shooting=n, horizon=horizon, substeps=2,
    )
    return spec, a_c, b_c


def discrete_matrices(a_c, b_c, dt, substeps):
    h = dt / substeps
    a2, a3 = a_c @ a_c, a_c @ a_c @ a_c
    a4 = a3 @ a_c
    ad = np.eye(2) + h * a_c + h**2 / 2 * a2 + h**3 / 6 * a3 + h**4 / 24 * a4
    bd = (h * np.eye(2) + h**2 / 2 * a_c + h**3 / 6 * a2 + h**4 / 24 * a3) @ b_c
    a_full, b_full = np.eye(2), np.zeros((2, 1))
    for _ in range(substeps):
        b_full = ad @ b_full + bd
        a_full = ad @ a_full
    return a_full, b_full


def test_lqr_matches_riccati():
    spec, a_c, b_c = lqr_spec()
    x0 = np.array([0.8, -0.3])
    sol = SqpSolver(spec).solve(x0)
    assert sol.converged

    ad, bd = discrete_matrices(a_c, b_c, spec.dt, spec.substeps)
    q_h = np.diag(spec.q_diag) * spec.dt
    r_h = np.diag(spec.r_diag) * spec.dt
    p = np.diag(spec.w_e_diag)
    for _ in range(spec.n_shooting):
        k_gain = np.linalg.solve(r_h + bd.T @ p @ bd, bd.T @ p @ ad)
        p = q_h + ad.T @ p @ ad - ad.T @ p @ bd @ k_gain
    u0 = -k_gain @ x0
    assert abs(sol.u[0, 0] - u0[0]) <= 1e-6


def test_zero_residual_start_converges_fast(params):
    # at the reference equilibrium the first QP step is already tiny
    dyn = PhaseADynamics(params, cfg.THETA_0, cfg.OMEGA_REF)
    spec = build_ocp_A(dyn)
    x_eq = np.concatenate([cfg.OMEGA_REF, cfg.Q_F])
    sol = SqpSolver(spec).solve(x_eq)
    assert sol.converged
    assert sol.iterations <= 2
    assert np.max(np.abs(sol.u)) <= 1e-6


def test_warm_start_consistency(params):
    dyn = PhaseADynamics(params, cfg.THETA_0, cfg.OMEGA_REF)
    spec = build_ocp_A(dyn)
    x0 = cfg.PHASE_A_X0.copy()
    x0[3:7] = quat_normalize(x0[3:7])
    solver = SqpSolver(spec)
    sol = solver.solve(x0)
    assert sol.converged
    re = solver.solve(x0, x_init=sol.x, u_init=sol.u)
    assert re.converged and re.iterations <= 2


def test_merit_non_increasing(params):
    dyn = PhaseADynamics(params, cfg.THETA_0, cfg.OMEGA_REF)
    spec = build_ocp_A(dyn)
    x0 = cfg.PHASE_A_X0.copy()
    x0[3:7] = quat_normalize(x0[3:7])
    sol = SqpSolver(spec).solve(x0)
    assert sol.converged
    for before, after in sol.merit_decrease:
        assert after <= before + 1e-9 * max(1.0, abs(before))


def test_converged_solution_feasible(params):
    dyn = PhaseADynamics(params, cfg.THETA_0, cfg.OMEGA_REF)
    spec = build_ocp_A(dyn)
    x0 = cfg.PHASE_A_X0.copy()
    x0[3:7] = quat_normalize(x0[3:7])
    sol = SqpSolver(spec).solve(x0)
    assert sol.converged
    assert sol.defect_norm <= 1e-5
    assert np.all(sol.u >= spec.u_min - 1e-8) and np.all(sol.u <= spec.u_max + 1e-8)
    assert np.all(sol.x >= spec.x_min - 1e-8) and np.all(sol.x <= spec.x_max + 1e-8)
    # defects re-checked against an independent rollout of the same controls
    x_chk = sol.x[0]
    worst = 0.0
    for k in range(spec.n_shooting):
        x_chk = dyn.step_batch(x_chk[None], sol.u[k][None], spec.dt, spec.substeps)[0]
        worst = max(worst, float(np.max(np.abs(x_chk - sol.x[k + 1]))))
        x_chk = sol.x[k + 1]
    assert worst <= 1e-5


def test_mpc_step_contracts(params):
    dyn = PhaseADynamics(params, cfg.THETA_0, cfg.OMEGA_REF)
    spec = build_ocp_A(dyn)
    x0 = cfg.PHASE_A_X0.copy()
    x0[3:7] = quat_normalize(x0[3:7])

    # determinism: two fresh controllers fed the same sequence agree exactly
    c1, c2 = MpcController(spec), MpcController(spec)
    x = x0.copy()
    for k in range(5):
        u1, _ = c1.step(x, k * spec.dt)
        u2, _ = c2.step(x, k * spec.dt)
        assert np.array_equal(u1, u2)
        assert np.all(u1 >= spec.u_min) and np.all(u1 <= spec.u_max)
        x = dyn.step_batch(x[None], u1[None], spec.dt, spec.substeps)[0]

    # at the equilibrium the control is (numerically) zero
    ctrl = MpcController(spec)
    u_eq, _ = ctrl.step(np.concatenate([cfg.OMEGA_REF, cfg.Q_F]), 0.0)
    assert np.max(np.abs(u_eq)) <= 1e-6


def test_linearize_dynamics_fd_vs_analytic(params):
    # quaternion kinematics block of the phase-A map vs the analytic Jacobian
    dyn = PhaseADynamics(params, cfg.THETA_0, np.zeros(3))
    x = np.concatenate([[0.02, -0.01, 0.3], quat_normalize([0.1, 0.2, -0.1, 0.95])])
    u = np.zeros(3)
    a_fd, b_fd = linearize_dynamics(dyn, x, u, dt=0.01, substeps=1)

    # analytic continuous Jacobian of q_dot = 1/2 [[-(w x)], w; -w^T, 0] q
    # (omega_s = 0 so omega_rel = omega); one RK4 substep chained exactly
    def f_jac(xv):
        w, q = xv[0:3], xv[3:7]
        j = np.zeros((7, 7))
        dq_dw = 0.5 * np.block(
            [[q[3] * np.eye(3) + skew(q[0:3])], [-q[0:3][None]]]
        )
        omega_mat = 0.5 * np.block([[-skew(w), w[:, None]], [-w[None], np.zeros((1, 1))]])
        j[3:7, 0:3] = dq_dw
        j[3:7, 3:7] = omega_mat
        return j

    def f_val(xv):
        w, q = xv[0:3], xv[3:7]
        return np.concatenate([dyn.gain @ u, quat_derivative(q, w)])

    h = 0.01
    eye = np.eye(7)
    # RK4 sensitivity chain for one substep
    k1, j1 = f_val(x), f_jac(x)
    x2 = x + 0.5 * h * k1
    k2, j2 = f_val(x2), f_jac(x2) @ (eye + 0.5 * h * j1)
    x3 = x + 0.5 * h * k2
    k3, j3 = f_val(x3), f_jac(x3) @ (eye + 0.5 * h * j2)
    x4 = x + h * k3
    j4 = f_jac(x4) @ (eye + h * j3)
    a_exact = eye + (h / 6.0) * (j1 + 2 * j2 + 2 * j3 + j4)
    # account for the renormalization projector at the end of the substep
    q_end = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + f_val(x4))
    qn = q_end[3:7]
    nrm = np.linalg.norm(qn)
    proj = (np.eye(4) - np.outer(qn, qn) / nrm**2) / nrm
    a_exact[3:7] = proj @ a_exact[3:7]
    rel = np.abs(a_fd - a_exact) / (1.0 + np.abs(a_exact))
    assert np.max(rel) <= 1e-5


def test_linear_dynamics_fd_exact():
    a_c = np.array([[0.0, 1.0], [-2.0, -0.3]])
    b_c = np.array([[0.5], [1.0]])
    dyn = CallableDynamics(2, 1, lambda x, u: x @ a_c.T + u @ b_c.T)
    a_fd, b_fd = linearize_dynamics(dyn, np.array([0.3, -0.2]), np.array([0.1]),
                                    dt=0.02, substeps=2)
    ad, bd = discrete_matrices(a_c, b_c, 0.02, 2)
    assert np.max(np.abs(a_fd - ad)) <= 1e-9
    assert np.max(np.abs(b_fd - bd)) <= 1e-9


def test_invalid_weights(params):
    dyn = PhaseADynamics(params, cfg.THETA_0, cfg.OMEGA_REF)
    with pytest.raises(InvalidWeights):
        build_ocp_A(dyn, q_diag=np.zeros(7))
    with pytest.raises(InvalidWeights):
        build_ocp_A(dyn, r_diag=[-1.0, 1.0, 1.0])


def test_build_ocp_defaults(params):
    dyn = PhaseADynamics(params, cfg.THETA_0, cfg.OMEGA_REF)
    spec = build_ocp_A(dyn)
    assert np.allclose(spec.q_diag, 400.0 * np.array([7, 7, 9, 9, 9, 12, 15]))
    assert np.allclose(spec.r_diag, 2.0 * np.array([0.8, 0.4, 0.6]))
    assert np.allclose(spec.u_max, [2.0, 2.0, 2.0])
    assert np.allclose(spec.w_e_diag, 50.0 * spec.q_diag)
    assert spec.n_shooting == 70 and abs(spec.horizon - 0.7) < 1e-12

    from spincontact.dynamics import PhaseBDynamics

    dyn_b = PhaseBDynamics(params, cfg.OMEGA_REF)
    spec_b = build_ocp_B(dyn_b, SplineRef(cfg.THETA_0, cfg.THETA_F))
    assert np.allclose(
        spec_b.q_diag,
        400.0 * np.array([20, 20, 25, 21, 21, 27, 15, 15, 15, 27, 27, 27, 32]),
    )
    assert np.allclose(spec_b.u_max, [2, 2, 2, 0.3, 0.3, 0.3])
    refs = spec_b.reference(0.0)
    assert refs.shape == (71, 13)
    assert np.allclose(refs[0, 0:3], cfg.THETA_0)
    # on-reference state with zero control has zero running cost
    err = refs[0] - refs[0]
    assert float(err @ (spec_b.q_diag * err)) == 0.0
