"""Dense convex QP solver: primal-dual interior point with Mehrotra corrector.

Solves   min 1/2 x^T H x + g^T x
         s.t. lb <= x <= ub,  A_in x <= b_in,  A_eq x = b_eq

with H positive semidefinite.  Bounds enter the reduced KKT system as
diagonal terms, general inequalities as a rank-m update, equalities as a
Schur complement.  When no constraint is active at the unconstrained
minimizer the solver returns it directly (the common case in warm-started
receding-horizon use).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve


@dataclass
class QpSolution:
    x: np.ndarray
    status: str  # converged | max_iter | infeasible | failed
    iterations: int
    kkt_residual: float
    z_lower: np.ndarray = None
    z_upper: np.ndarray = None
    lam_in: np.ndarray = None
    y_eq: np.ndarray = None
    # (cholesky of the free-free block, free mask) when solved by the
    # verified-active-set fast path; lets callers bound follow-up solves
    reduced_factor: tuple = None

    @property
    def ok(self):
        return self.status == "converged"


def _chol_solve(chol, b):
    return cho_solve((chol, True), b, check_finite=False)


def _active_set_presolve(h, g, lb, ub, a_in, b_in, guess_lo, guess_up, reg, tol,
                         max_updates=10):
    """Primal-dual active-set iteration seeded by a guessed bound set.

    Clamped variables sit at their bounds and the free block is solved by
    Cholesky; primal-infeasible free variables are clamped, dual-infeasible
    clamped ones released, and the result is accepted only once the full
    KKT system verifies.  Returns None (leaving the interior-point path to
    run) when no clean verification is reached within the update budget.
    """
    n = g.shape[0]
    lo = guess_lo.copy()
    up = guess_up.copy()
    for _ in range(max_updates):
        active = lo | up
        x = np.where(lo, lb, np.where(up, ub, 0.0))
        free = ~active
        nf = int(free.sum())
        chol = None
        if nf:
            h_ff = h[np.ix_(free, free)] + reg[np.ix_(free, free)]
            rhs = -g[free]
            if active.any():
                rhs = rhs - h[np.ix_(free, active)] @ x[active]
            try:
                chol = np.linalg.cholesky(h_ff)
            except np.linalg.LinAlgError:
                return None
            x[free] = _chol_solve(chol, rhs)
        grad = h @ x + g
        viol_lo = free & (x < lb - 1e-12)
        viol_up = free & (x > ub + 1e-12)
        rel_lo = lo & (grad < -1e-9)
        rel_up = up & (grad > 1e-9)
        if not (viol_lo.any() or viol_up.any() or rel_lo.any() or rel_up.any()):
            if a_in is not None and np.any(a_in @ x > b_in + 1e-12):
                return None
            kkt = float(np.max(np.abs(np.where(free, grad, 0.0)), initial=0.0))
            if kkt > tol * (1.0 + float(np.max(np.abs(g)))):
                return None
            return QpSolution(
                x, "converged", 0, kkt,
                np.where(lo, grad, 0.0), np.where(up, -grad, 0.0),
                np.zeros(0 if a_in is None else a_in.shape[0]), np.zeros(0),
                reduced_factor=(chol, free),
            )
        lo = (lo & ~rel_lo) | viol_lo
        up = (up & ~rel_up) | viol_up
    return None


def solve_qp(h, g, lb=None, ub=None, a_in=None, b_in=None, a_eq=None, b_eq=None,
             tol=1e-8, max_iter=2000, active_guess=None):
    """Primal-dual interior-point solve; see module docstring.

    active_guess, when given as boolean masks (lower, upper) over x, is
    tried first as a verified direct solve (one factorization); receding-
    horizon callers pass the previous step's active set.
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    lb = np.full(n, -np.inf) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
    if a_in is not None and len(a_in) == 0:
        a_in, b_in = None, None
    a_in = None if a_in is None else np.asarray(a_in, dtype=float)
    b_in = None if b_in is None else np.asarray(b_in, dtype=float)
    if a_eq is not None and len(a_eq) == 0:
        a_eq, b_eq = None, None
    a_eq = None if a_eq is None else np.asarray(a_eq, dtype=float)
    b_eq = None if b_eq is None else np.asarray(b_eq, dtype=float)
    m_in = 0 if a_in is None else a_in.shape[0]
    m_eq = 0 if a_eq is None else a_eq.shape[0]
    has_l = np.isfinite(lb)
    has_u = np.isfinite(ub)

    scale = 1.0 + max(float(np.max(np.abs(g))), float(np.max(np.abs(h))))
    reg = 1e-13 * scale * np.eye(n)

    # fast path: verified active-set solve seeded by the guess (or empty set)
    if m_eq == 0:
        if active_guess is not None:
            lo = np.asarray(active_guess[0], dtype=bool) & has_l
            up = np.asarray(active_guess[1], dtype=bool) & has_u & ~lo
        else:
            lo = np.zeros(n, dtype=bool)
            up = np.zeros(n, dtype=bool)
        sol = _active_set_presolve(h, g, lb, ub, a_in, b_in, lo, up, reg, tol)
        if sol is not None:
            return sol
    if m_eq and m_in == 0 and not has_l.any() and not has_u.any():
        kkt = np.block([[h + reg, a_eq.T], [a_eq, np.zeros((m_eq, m_eq))]])
        try:
            sol = np.linalg.solve(kkt, np.concatenate([-g, b_eq]))
        except np.linalg.LinAlgError:
            return QpSolution(np.zeros(n), "failed", 0, np.inf)
        return QpSolution(sol[:n], "converged", 0, 0.0, np.zeros(n), np.zeros(n),
                          np.zeros(0), sol[n:])

    # strictly interior start
    x = np.clip(np.zeros(n), np.where(has_l, lb + 1e-3, -np.inf),
                np.where(has_u, ub - 1e-3, np.inf))
    s_l = np.where(has_l, np.maximum(1.0, x - lb), 1.0)
    s_u = np.where(has_u, np.maximum(1.0, ub - x), 1.0)
    z_l = np.ones(n)
    z_u = np.ones(n)
    s_in = np.maximum(1.0, b_in - a_in @ x) if m_in else np.zeros(0)
    lam = np.ones(m_in)
    y = np.zeros(m_eq)

    n_compl = max(int(has_l.sum() + has_u.sum() + m_in), 1)
    best = (np.inf, x.copy(), z_l.copy(), z_u.copy(), lam.copy(), y.copy())

    for it in range(1, max_iter + 1):
        r_dual = h @ x + g - np.where(has_l, z_l, 0.0) + np.where(has_u, z_u, 0.0)
        if m_in:
            r_dual += a_in.T @ lam
        if m_eq:
            r_dual += a_eq.T @ y
        r_l = np.where(has_l, x - s_l - lb, 0.0)
        r_u = np.where(has_u, x + s_u - ub, 0.0)
        r_in = a_in @ x + s_in - b_in if m_in else np.zeros(0)
        r_eq = a_eq @ x - b_eq if m_eq else np.zeros(0)
        gap = (
            float(np.sum(s_l * z_l * has_l))
            + float(np.sum(s_u * z_u * has_u))
            + (float(s_in @ lam) if m_in else 0.0)
        )
        mu = gap / n_compl
        kkt_res = max(
            float(np.max(np.abs(r_dual))) / scale,
            float(np.max(np.abs(r_l), initial=0.0)),
            float(np.max(np.abs(r_u), initial=0.0)),
            float(np.max(np.abs(r_in), initial=0.0)),
            float(np.max(np.abs(r_eq), initial=0.0)),
            mu,
        )
        if kkt_res < best[0]:
            best = (kkt_res, x.copy(), z_l.copy(), z_u.copy(), lam.copy(), y.copy())
        # near-degenerate actives need mu well below tol for tol-accurate x,
        # so the duality measure is driven four orders past the residuals
        if kkt_res <= tol and mu <= max(1e4 * tol * tol, 1e-14):
            return QpSolution(x, "converged", it - 1, kkt_res,
                              np.where(has_l, z_l, 0.0), np.where(has_u, z_u, 0.0), lam, y)
        if not np.isfinite(kkt_res) or max(np.max(z_l + z_u), np.max(lam, initial=0.0)) > 1e14:
            return QpSolution(best[1], "infeasible", it - 1, best[0], best[2], best[3],
                              best[4], best[5])

        d_l = np.where(has_l, z_l / s_l, 0.0)
        d_u = np.where(has_u, z_u / s_u, 0.0)
        k_mat = h + np.diag(d_l + d_u) + reg
        if m_in:
            d_in = lam / s_in
            k_mat = k_mat + (a_in.T * d_in) @ a_in
        try:
            chol = np.linalg.cholesky(k_mat)
        except np.linalg.LinAlgError:
            return QpSolution(best[1], "failed", it - 1, best[0])

        def newton(rc_l, rc_u, rc_in):
            """Solve the reduced Newton system for one set of complementarity targets.

            rc_* is the residual s*z - target (plus any corrector term).
            """
            rhs = -r_dual - np.where(has_l, (rc_l + z_l * r_l) / s_l, 0.0) + np.where(
                has_u, (rc_u - z_u * r_u) / s_u, 0.0
            )
            if m_in:
                rhs += a_in.T @ ((rc_in - lam * r_in) / s_in)
            if m_eq:
                k_inv_aeq = _chol_solve(chol, a_eq.T)
                k_inv_rhs = _chol_solve(chol, rhs)
                schur = a_eq @ k_inv_aeq
                dy = np.linalg.solve(schur, a_eq @ k_inv_rhs + r_eq)
                dx = k_inv_rhs - k_inv_aeq @ dy
            else:
                dy = np.zeros(0)
                dx = _chol_solve(chol, rhs)
            ds_l = np.where(has_l, dx + r_l, 0.0)
            ds_u = np.where(has_u, -dx - r_u, 0.0)
            dz_l = np.where(has_l, -(rc_l + z_l * ds_l) / s_l, 0.0)
            dz_u = np.where(has_u, -(rc_u + z_u * ds_u) / s_u, 0.0)
            if m_in:
                ds_in = -r_in - a_in @ dx
                dlam = -(rc_in + lam * ds_in) / s_in
            else:
                ds_in = np.zeros(0)
                dlam = np.zeros(0)
            return dx, dy, ds_l, ds_u, dz_l, dz_u, ds_in, dlam

        def max_step(v, dv, mask=None):
            neg = dv < 0.0
            if mask is not None:
                neg &= mask
            if not np.any(neg):
                return 1.0
            return min(1.0, float(np.min(-v[neg] / dv[neg])))

        # affine predictor
        aff = newton(s_l * z_l, s_u * z_u, s_in * lam if m_in else np.zeros(0))
        dxa, _, dsla, dsua, dzla, dzua, dsina, dlama = aff
        a_p = min(max_step(s_l, dsla, has_l), max_step(s_u, dsua, has_u), max_step(s_in, dsina))
        a_d = min(max_step(z_l, dzla, has_l), max_step(z_u, dzua, has_u), max_step(lam, dlama))
        gap_aff = (
            float(np.sum((s_l + a_p * dsla) * (z_l + a_d * dzla) * has_l))
            + float(np.sum((s_u + a_p * dsua) * (z_u + a_d * dzua) * has_u))
            + (float((s_in + a_p * dsina) @ (lam + a_d * dlama)) if m_in else 0.0)
        )
        sigma = (gap_aff / gap) ** 3 if gap > 0 else 0.1
        sig_mu = sigma * mu

        # corrector
        step = newton(
            s_l * z_l - sig_mu + dsla * dzla,
            s_u * z_u - sig_mu + dsua * dzua,
            (s_in * lam - sig_mu + dsina * dlama) if m_in else np.zeros(0),
        )
        dx, dy, ds_l, ds_u, dz_l, dz_u, ds_in, dlam = step
        a_p = min(max_step(s_l, ds_l, has_l), max_step(s_u, ds_u, has_u), max_step(s_in, ds_in))
        a_d = min(max_step(z_l, dz_l, has_l), max_step(z_u, dz_u, has_u), max_step(lam, dlam))
        a_p = min(1.0, 0.995 * a_p)
        a_d = min(1.0, 0.995 * a_d)

        x = x + a_p * dx
        s_l = np.where(has_l, s_l + a_p * ds_l, s_l)
        s_u = np.where(has_u, s_u + a_p * ds_u, s_u)
        z_l = np.where(has_l, z_l + a_d * dz_l, z_l)
        z_u = np.where(has_u, z_u + a_d * dz_u, z_u)
        if m_in:
            s_in = s_in + a_p * ds_in
            lam = lam + a_d * dlam
        if m_eq:
            y = y + a_d * dy

    return QpSolution(best[1], "max_iter", max_iter, best[0], best[2], best[3],
                      best[4], best[5])
