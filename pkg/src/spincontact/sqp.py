"""Direct multiple-shooting Gauss-Newton SQP and the receding-horizon loop.

Decision variables are all node states and controls; shooting defects are
the equality constraints.  Each iteration linearizes the discrete dynamics
by forward differences, condenses the state increments onto the control
increments (block size = horizon, i.e. a dense control-parameterized QP),
solves the QP with the interior-point method, and globalizes with a
backtracking line search on an L1 merit function.  State boxes are added
lazily: rows enter the QP only when the predicted trajectory violates them,
which is exact because inactive rows carry zero multipliers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import config as cfg
from .errors import NonFiniteState, SolverFailure
from .ocp import OcpSpec
from .qp import _chol_solve, solve_qp


@dataclass
class SqpSettings:
    max_sqp_iter: int = cfg.SQP_DEFAULTS["max_sqp_iter"]
    max_qp_iter: int = cfg.SQP_DEFAULTS["max_qp_iter"]
    kkt_tol: float = cfg.SQP_DEFAULTS["kkt_tol"]
    eq_tol: float = cfg.SQP_DEFAULTS["eq_tol"]
    backtrack_factor: float = cfg.SQP_DEFAULTS["backtrack_factor"]
    armijo_c1: float = cfg.SQP_DEFAULTS["armijo_c1"]
    min_step: float = cfg.SQP_DEFAULTS["min_step"]
    slack_penalty: float = cfg.SQP_DEFAULTS["slack_penalty"]
    fd_step: float = 1e-6
    qp_tol: float = 1e-8
    max_row_rounds: int = 5

    def __post_init__(self):
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if min(self.kkt_tol, self.eq_tol, self.qp_tol) <= 0.0:
            raise ValueError("tolerances must be positive")


@dataclass
class OcpSolution:
    x: np.ndarray  # (N+1, nx)
    u: np.ndarray  # (N, nu)
    status: str  # converged | max_iter | qp_failure | non_finite
    iterations: int
    kkt_residual: float
    defect_norm: float
    merit_decrease: list = field(default_factory=list)  # (phi_before, phi_after) pairs
    qp_iterations: int = 0
    terminal_band: dict = None

    @property
    def converged(self):
        return self.status == "converged"


def linearize_dynamics(dynamics, x, u, dt, substeps=1, fd_step=1e-6):
    """Forward-difference Jacobians (A, B) of the discrete step map."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    nx, nu = x.shape[-1], u.shape[-1]
    hx = fd_step * np.maximum(1.0, np.abs(x))
    hu = fd_step * np.maximum(1.0, np.abs(u))
    rows = [np.concatenate([x, u])]
    for i in range(nx):
        xp = x.copy()
        xp[i] += hx[i]
        rows.append(np.concatenate([xp, u]))
    for j in range(nu):
        up = u.copy()
        up[j] += hu[j]
        rows.append(np.concatenate([x, up]))
    batch = np.array(rows)
    out = dynamics.step_batch(batch[:, :nx], batch[:, nx:], dt, substeps)
    a = (out[1 : 1 + nx] - out[0]) / hx[:, None]
    b = (out[1 + nx :] - out[0]) / hu[:, None]
    return a.T, b.T


class SqpSolver:
    def __init__(self, spec: OcpSpec, settings: SqpSettings = None):
        self.spec = spec
        self.settings = settings or SqpSettings()
        self._mu = 1.0
        self._qp_active = None  # (lower, upper) bound masks from the last QP

    def shift_active(self, nu):
        if self._qp_active is None:
            return
        lo, up = (m.copy() for m in self._qp_active)
        lo[:-nu] = lo[nu:]
        up[:-nu] = up[nu:]
        self._qp_active = (lo, up)

    # -- pieces --------------------------------------------------------------

    def _rollout(self, x0, u_traj):
        spec = self.spec
        n = spec.n_shooting
        x = np.empty((n + 1, spec.dynamics.nx))
        x[0] = x0
        for k in range(n):
            x[k + 1] = spec.dynamics.step_batch(
                x[k][None], u_traj[k][None], spec.dt, spec.substeps
            )[0]
        return x

    def _step_all(self, x_nodes, u_traj):
        spec = self.spec
        return spec.dynamics.step_batch(x_nodes, u_traj, spec.dt, spec.substeps)

    def _linearize_all(self, x_traj, u_traj):
        spec = self.spec
        n, nx, nu = spec.n_shooting, spec.dynamics.nx, spec.dynamics.nu
        xs = x_traj[:n]
        hx = self.settings.fd_step * np.maximum(1.0, np.abs(xs))
        hu = self.settings.fd_step * np.maximum(1.0, np.abs(u_traj))
        nd = nx + nu
        xb = np.repeat(xs[None], nd + 1, axis=0)
        ub = np.repeat(u_traj[None], nd + 1, axis=0)
        for i in range(nx):
            xb[1 + i, :, i] += hx[:, i]
        for j in range(nu):
            ub[1 + nx + j, :, j] += hu[:, j]
        out = self._step_all(xb.reshape(-1, nx), ub.reshape(-1, nu)).reshape(nd + 1, n, nx)
        f_nom = out[0]
        a = np.transpose((out[1 : 1 + nx] - f_nom) / hx.T[:, :, None], (1, 2, 0))
        b = np.transpose((out[1 + nx :] - f_nom) / hu.T[:, :, None], (1, 2, 0))
        return f_nom, a, b

    def _cost(self, x_traj, u_traj, refs, wq, wr, wn):
        err = x_traj - refs
        return (
            float(np.sum(wq * err[:-1] ** 2))
            + float(np.sum(wn * err[-1] ** 2))
            + float(np.sum(wr * u_traj**2))
        )

    @staticmethod
    def _band_values(err_n, bands):
        return np.array(
            [float(err_n[b.start : b.stop] @ (b.weights * err_n[b.start : b.stop]))
             for b in bands]
        )

    def _terminal_band(self, x_n, ref_n):
        err = x_n - ref_n
        return {
            b.name: float(err[b.start : b.stop] @ (b.weights * err[b.start : b.stop]))
            <= b.eps
            for b in self.spec.terminal_bands()
        }

    # -- main solve ----------------------------------------------------------

    def solve(self, x0, t0=0.0, x_init=None, u_init=None) -> OcpSolution:
        spec = self.spec
        st = self.settings
        n, nx, nu = spec.n_shooting, spec.dynamics.nx, spec.dynamics.nu
        n_u = n * nu

        x0 = np.clip(np.asarray(x0, dtype=float), spec.x_min, spec.x_max)
        if hasattr(spec.dynamics, "normalize"):
            x0 = spec.dynamics.normalize(x0)
        refs = spec.reference(t0)
        wq = spec.dt * spec.q_diag
        wr = spec.dt * spec.r_diag
        wn = spec.w_e_diag

        u_traj = np.zeros((n, nu)) if u_init is None else np.array(u_init, dtype=float)
        u_traj = np.clip(u_traj, spec.u_min, spec.u_max)
        try:
            x_traj = (
                self._rollout(x0, u_traj) if x_init is None else np.array(x_init, dtype=float)
            )
        except NonFiniteState:
            return OcpSolution(None, None, "non_finite", 0, np.inf, np.inf)
        x_traj[0] = x0

        mu = self._mu
        merit_pairs = []
        qp_iters = 0
        status = "max_iter"
        kkt_res = np.inf
        defects = None
        it = 0
        w_all = np.vstack([np.tile(wq, (n, 1)), wn[None]])
        wr_tiled = np.tile(wr, n)

        while it < st.max_sqp_iter:
            it += 1
            try:
                f_nom, a_mat, b_mat = self._linearize_all(x_traj, u_traj)
            except NonFiniteState:
                status = "non_finite"
                break
            defects = f_nom - x_traj[1:]
            defect_inf = float(np.max(np.abs(defects)))
            # condense: x_k + dx_k with dx_k = S_k dU + m_k
            s_mat = np.zeros((n + 1, nx, n_u))
            m_vec = np.zeros((n + 1, nx))
            for k in range(n):
                s_mat[k + 1] = a_mat[k] @ s_mat[k]
                s_mat[k + 1][:, k * nu : (k + 1) * nu] += b_mat[k]
                m_vec[k + 1] = a_mat[k] @ m_vec[k] + defects[k]
            s_flat = s_mat.reshape((n + 1) * nx, n_u)
            sw_flat = (s_mat * w_all[:, :, None]).reshape((n + 1) * nx, n_u)
            h_qp = 2.0 * (s_flat.T @ sw_flat)
            h_qp[np.arange(n_u), np.arange(n_u)] += 2.0 * wr_tiled

            err0 = x_traj + m_vec - refs
            g_qp = 2.0 * (sw_flat.T @ err0.reshape(-1) + (wr * u_traj).reshape(-1))

            lb_u = (spec.u_min - u_traj).reshape(-1)
            ub_u = (spec.u_max - u_traj).reshape(-1)

            # lazy state-box rows
            rows_a, rows_b = [], []
            qp_sol = None
            d_u = None
            for _ in range(st.max_row_rounds):
                a_in = np.array(rows_a) if rows_a else None
                b_in = np.array(rows_b) if rows_b else None
                guess = None
                if self._qp_active is not None and self._qp_active[0].shape[0] == n_u:
                    guess = self._qp_active
                qp_sol = solve_qp(h_qp, g_qp, lb=lb_u, ub=ub_u, a_in=a_in, b_in=b_in,
                                  tol=st.qp_tol, max_iter=st.max_qp_iter,
                                  active_guess=guess)
                qp_iters += qp_sol.iterations
                if not qp_sol.ok and rows_a:
                    qp_sol = self._slack_retry(h_qp, g_qp, lb_u, ub_u, a_in, b_in)
                    if qp_sol is not None:
                        qp_iters += qp_sol.iterations
                if qp_sol is None or not qp_sol.ok:
                    break
                d_u = qp_sol.x
                pred = x_traj[1:] + s_mat[1:] @ d_u + m_vec[1:]
                qs = getattr(spec.dynamics, "quat_slice", None)
                if qs is not None:
                    # the discrete map renormalizes, so box rows are judged on
                    # the renormalized prediction (raw linear predictions
                    # overshoot the unit sphere by harmless second-order bits)
                    pred[:, qs] /= np.linalg.norm(pred[:, qs], axis=-1, keepdims=True)
                hi = pred - spec.x_max
                lo = spec.x_min - pred
                new_rows = 0
                for k, i in zip(*np.where(hi > 1e-9)):
                    rows_a.append(s_mat[1 + k][i])
                    rows_b.append(spec.x_max[i] - x_traj[1 + k, i] - m_vec[1 + k, i])
                    new_rows += 1
                for k, i in zip(*np.where(lo > 1e-9)):
                    rows_a.append(-s_mat[1 + k][i])
                    rows_b.append(x_traj[1 + k, i] + m_vec[1 + k, i] - spec.x_min[i])
                    new_rows += 1
                if new_rows == 0:
                    break
            if qp_sol is None or not qp_sol.ok or d_u is None:
                status = "qp_failure"
                break
            self._qp_active = (d_u <= lb_u + 1e-9, d_u >= ub_u - 1e-9)
            reduced_factor = qp_sol.reduced_factor

            d_x = np.concatenate([np.zeros((1, nx)), s_mat[1:] @ d_u + m_vec[1:]])
            step_norm = float(np.max(np.abs(d_u))) / (1.0 + float(np.max(np.abs(u_traj))))
            x_viol = float(
                np.max(
                    np.maximum(x_traj - spec.x_max, spec.x_min - x_traj), initial=0.0
                )
            )
            if step_norm <= st.kkt_tol and defect_inf <= st.eq_tol and x_viol <= 1e-8:
                status = "converged"
                kkt_res = max(step_norm, defect_inf)
                break

            # exact-penalty weight from estimated defect multipliers
            err1 = err0 + (s_mat @ d_u)
            lam = 2.0 * wn * err1[-1]
            lam_max = float(np.max(np.abs(lam)))
            for k in range(n - 1, 0, -1):
                lam = 2.0 * wq * err1[k] + a_mat[k].T @ lam
                lam_max = max(lam_max, float(np.max(np.abs(lam))))
            mu = max(mu, 1.1 * lam_max, 1.0)

            cost0 = self._cost(x_traj, u_traj, refs, wq, wr, wn)
            phi0 = cost0 + mu * float(np.sum(np.abs(defects)))
            d_cost = (
                2.0 * float(np.sum(wq * (x_traj[:-1] - refs[:-1]) * d_x[:-1]))
                + 2.0 * float(np.sum(wn * (x_traj[-1] - refs[-1]) * d_x[-1]))
                + 2.0 * float(np.sum(wr * u_traj * d_u.reshape(n, nu)))
            )
            d_phi = d_cost - mu * float(np.sum(np.abs(defects)))

            alpha = 1.0
            accepted = False
            while alpha >= st.min_step:
                x_new = x_traj + alpha * d_x
                u_new = u_traj + alpha * d_u.reshape(n, nu)
                try:
                    f_new = self._step_all(x_new[:n], u_new)
                except NonFiniteState:
                    alpha *= st.backtrack_factor
                    continue
                defects_new = f_new - x_new[1:]
                phi = self._cost(x_new, u_new, refs, wq, wr, wn) + mu * float(
                    np.sum(np.abs(defects_new))
                )
                if phi <= phi0 + st.armijo_c1 * alpha * d_phi or phi <= phi0:
                    accepted = True
                    break
                alpha *= st.backtrack_factor
            if not accepted:
                status = "max_iter"
                break
            merit_pairs.append((phi0, phi))
            x_traj, u_traj = x_new, u_new
            defects = defects_new
            defect_new_inf = float(np.max(np.abs(defects_new)))

            # a full small step from a feasible point is the Newton fixed point
            if alpha == 1.0 and step_norm <= st.kkt_tol and defect_new_inf <= st.eq_tol:
                status = "converged"
                kkt_res = max(step_norm, defect_new_inf)
                break

            # shifted-optimum test: after a full step, in the frozen linear model
            # with unchanged active set, the next QP step is exactly
            # -H_ff^-1 (g_new - g - H dU) on the free variables (the stationary
            # part cancels by the previous QP's optimality); declare convergence
            # when that step and the exact defects are inside tolerance
            if (
                alpha == 1.0
                and not rows_a
                and defect_new_inf <= st.eq_tol
                and reduced_factor is not None
            ):
                x_viol_new = float(np.max(np.maximum(
                    x_traj - spec.x_max, spec.x_min - x_traj), initial=0.0))
                if x_viol_new <= 1e-8:
                    m_new = np.zeros((n + 1, nx))
                    for k in range(n):
                        m_new[k + 1] = a_mat[k] @ m_new[k] + defects_new[k]
                    err_new = x_traj + m_new - refs
                    g_new = 2.0 * (
                        sw_flat.T @ err_new.reshape(-1) + (wr * u_traj).reshape(-1)
                    )
                    dg_err = g_new - g_qp - h_qp @ d_u
                    chol_ff, free = reduced_factor
                    next_free = (
                        _chol_solve(chol_ff, dg_err[free]) if chol_ff is not None else 0.0
                    )
                    next_norm = float(np.max(np.abs(next_free), initial=0.0))
                    lo_m, up_m = self._qp_active
                    duals_ok = bool(
                        np.all(qp_sol.z_lower[lo_m] + dg_err[lo_m] >= -1e-7)
                        and np.all(qp_sol.z_upper[up_m] - dg_err[up_m] >= -1e-7)
                    )
                    step2 = next_norm / (1.0 + float(np.max(np.abs(u_traj))))
                    if duals_ok and step2 <= st.kkt_tol:
                        status = "converged"
                        kkt_res = max(step2, defect_new_inf)
                        break

        self._mu = min(mu, 1e6)
        defect_inf = float(np.max(np.abs(defects))) if defects is not None else np.inf
        if status == "converged" and not np.isfinite(kkt_res):
            kkt_res = defect_inf
        band = self._terminal_band(x_traj[-1], refs[-1]) if status == "converged" else None
        return OcpSolution(
            x=x_traj,
            u=u_traj,
            status=status,
            iterations=it,
            kkt_residual=kkt_res,
            defect_norm=defect_inf,
            merit_decrease=merit_pairs,
            qp_iterations=qp_iters,
            terminal_band=band,
        )

    def _slack_retry(self, h_qp, g_qp, lb_u, ub_u, a_in, b_in):
        """L1-relax the state rows once (penalty from settings) and retry."""
        st = self.settings
        n_u = g_qp.shape[0]
        m = a_in.shape[0]
        h_ext = np.zeros((n_u + m, n_u + m))
        h_ext[:n_u, :n_u] = h_qp
        h_ext[np.arange(n_u, n_u + m), np.arange(n_u, n_u + m)] = 1e-8
        g_ext = np.concatenate([g_qp, np.full(m, st.slack_penalty)])
        lb = np.concatenate([lb_u, np.zeros(m)])
        ub = np.concatenate([ub_u, np.full(m, np.inf)])
        a_ext = np.hstack([a_in, -np.eye(m)])
        sol = solve_qp(h_ext, g_ext, lb=lb, ub=ub, a_in=a_ext, b_in=b_in,
                       tol=st.qp_tol, max_iter=st.max_qp_iter)
        if not sol.ok:
            return None
        sol.x = sol.x[:n_u]
        return sol


@dataclass
class StepDiagnostics:
    solve_time: float
    iterations: int
    qp_iterations: int
    kkt_residual: float
    status: str
    terminal_band: dict = None


class MpcController:
    """Receding-horizon wrapper: shift, re-solve, apply the first control."""

    def __init__(self, spec: OcpSpec, settings: SqpSettings = None):
        self.spec = spec
        self.solver = SqpSolver(spec, settings)
        self.prev: OcpSolution = None

    def reset(self):
        self.prev = None
        self.solver._mu = 1.0
        self.solver._qp_active = None

    def step(self, x_meas, t):
        spec = self.spec
        tic = time.perf_counter()
        x_init = u_init = None
        if self.prev is not None and self.prev.converged:
            u_prev, x_prev = self.prev.u, self.prev.x
            self.solver.shift_active(spec.dynamics.nu)
            u_init = np.vstack([u_prev[1:], u_prev[-1:]])
            x_tail = spec.dynamics.step_batch(
                x_prev[-1][None], u_prev[-1][None], spec.dt, spec.substeps
            )
            x_init = np.vstack([x_prev[1:], x_tail])
        sol = self.solver.solve(x_meas, t0=t, x_init=x_init, u_init=u_init)
        elapsed = time.perf_counter() - tic
        if not sol.converged:
            raise SolverFailure(f"OCP solve failed with status {sol.status} at t={t:.2f}")
        self.prev = sol
        diag = StepDiagnostics(
            solve_time=elapsed,
            iterations=sol.iterations,
            qp_iterations=sol.qp_iterations,
            kkt_residual=sol.kkt_residual,
            status=sol.status,
            terminal_band=sol.terminal_band,
        )
        return sol.u[0].copy(), diag
