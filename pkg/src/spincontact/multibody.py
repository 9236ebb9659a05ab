"""Momentum-coupled rigid-multibody dynamics of the servicer satellite.

Builds the kinetic-energy inertia blocks, the generalized inertia matrices
and nonlinear terms, the reduced dynamics for the locked-arm phase and the
coupled base/arm phase, and the planar-arm forward kinematics.

Conventions: the 12 generalized rates are w = [v_B, omega_B, theta_dot,
phi_dot]; kinetic energy is the quadratic form K = w^T H w with the blocks
below, and the equations of motion are H w_dot + c = tau with
c = H_dot w - 1/2 [w^T dH/dtheta_j w]_j (the gradient term lives in the
joint rows only, since H depends on theta alone).  The free-floating
reduction eliminates v_B_dot using zero net external force, and the wheel
accelerations are eliminated through the (constant) wheel blocks.

All functions broadcast over leading batch dimensions of theta.  The
nonlinear terms use closed-form block derivatives dH/dtheta_j; the
finite-difference dh_dtheta is kept as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularInertia
from .params import SatelliteParams
from .quat import skew

FD_STEP = 1e-6


@dataclass
class InertiaBlocks:
    """Blocks of the 12x12 kinetic-energy matrix H (batched)."""

    H_V: np.ndarray
    H_VO: np.ndarray  # v_B / omega coupling
    H_Vth: np.ndarray
    H_VPhi: np.ndarray
    H_O: np.ndarray
    H_Oth: np.ndarray
    H_OPhi: np.ndarray
    H_th: np.ndarray
    H_thPhi: np.ndarray
    H_Phi: np.ndarray


@dataclass
class BlockDerivatives:
    """d(block)/dtheta_m for the theta-dependent blocks, deriv index at -3."""

    dH_VO: np.ndarray
    dH_Vth: np.ndarray
    dH_O: np.ndarray
    dH_Oth: np.ndarray
    dH_th: np.ndarray


@dataclass
class GeneralizedDynamics:
    """Generalized inertia matrices and (optionally) nonlinear terms.

    M_hat_b, B_eff and the c terms realize the numerically robust reduced
    form (Schur elimination of the wheel accelerations, needing only
    M_r^-1):

        M_hat_b = M_b - M_br M_r^-1 M_br^T      B_eff = -M_br M_r^-1
        M_hat_b w_dot + M_bm th_dd = B_eff (tau_r - c_r) - c_b

    M_tilde_b / M_tilde_bm / c_tilde_b are the equivalent published forms
    (the same rows left-multiplied by -M_r M_br^-1); they additionally need
    an invertible wheel-base coupling M_br.
    """

    M_b: np.ndarray
    M_bm: np.ndarray
    M_br: np.ndarray
    M_m: np.ndarray
    M_r: np.ndarray
    M_hat_b: np.ndarray = None
    B_eff: np.ndarray = None
    c_b: np.ndarray = None
    c_m: np.ndarray = None
    c_r: np.ndarray = None

    def __post_init__(self):
        if self.M_hat_b is None:
            m_r_inv = np.linalg.inv(self.M_r)
            self.M_hat_b = self.M_b - self.M_br @ m_r_inv @ np.swapaxes(self.M_br, -1, -2)
            self.B_eff = -self.M_br @ m_r_inv

    @property
    def M_tilde_b(self):
        return self._row_factor() @ self.M_hat_b

    @property
    def M_tilde_bm(self):
        return self._row_factor() @ self.M_bm

    @property
    def c_tilde_b(self):
        c_hat = self.c_b - (self.M_br @ np.linalg.inv(self.M_r) @ self.c_r[..., None])[..., 0]
        return (self._row_factor() @ c_hat[..., None])[..., 0]

    def _row_factor(self):
        return -self.M_r @ np.linalg.inv(self.M_br)


@dataclass(frozen=True)
class ArmConfig:
    """Joint angles and rates of the 3-DoF planar arm."""

    theta: np.ndarray
    theta_dot: np.ndarray

    def wrapped(self):
        return np.mod(np.asarray(self.theta, dtype=float), 2.0 * np.pi)


def _mv(mat, vec):
    return (mat @ vec[..., None])[..., 0]


# ---------------------------------------------------------------------------
# planar-arm kinematics
# ---------------------------------------------------------------------------


def _chain_trig(theta):
    phi = np.cumsum(np.asarray(theta, dtype=float), axis=-1)
    return np.cos(phi), np.sin(phi)


def forward_kinematics(theta, p: SatelliteParams):
    """End-effector position (arm frame) and heading angle.

    x = L1 cos t1 + L2 cos(t1+t2) + L3 cos(t1+t2+t3), y analogous, z = 0.
    """
    c, s = _chain_trig(theta)
    lengths = np.asarray(p.lengths)
    x = np.sum(lengths * c, axis=-1)
    y = np.sum(lengths * s, axis=-1)
    theta_ee = np.sum(np.asarray(theta, dtype=float), axis=-1)
    p_ee = np.stack([x, y, np.zeros_like(x)], axis=-1)
    return p_ee, theta_ee


def fk_velocity(theta, theta_dot, p: SatelliteParams):
    """End-effector velocity in the arm frame."""
    c, s = _chain_trig(theta)
    theta_dot = np.asarray(theta_dot, dtype=float)
    rates = np.cumsum(theta_dot, axis=-1)  # phi_dot_i = sum_{j<=i} theta_dot_j
    lengths = np.asarray(p.lengths)
    vx = -np.sum(lengths * s * rates, axis=-1)
    vy = np.sum(lengths * c * rates, axis=-1)
    return np.stack([vx, vy, np.zeros_like(vx)], axis=-1)


def com_positions(theta, p: SatelliteParams):
    """CoM positions of bodies 0..6 in the base frame, shape (..., 7, 3)."""
    theta = np.asarray(theta, dtype=float)
    c, s = _chain_trig(theta)
    batch = theta.shape[:-1]
    out = np.zeros(batch + (7, 3))
    lengths = p.lengths
    joint = np.broadcast_to(p.arm_mount, batch + (3,)).copy()
    for i in range(3):
        axis = np.stack([c[..., i], s[..., i], np.zeros_like(c[..., i])], axis=-1)
        out[..., 1 + i, :] = joint + 0.5 * lengths[i] * axis
        joint = joint + lengths[i] * axis
    out[..., 4:, :] = p.wheel_coms
    return out


def link_jacobians(theta, p: SatelliteParams):
    """Linear and angular Jacobians of the three link CoMs.

    v_i = J_L[i] theta_dot, omega_i = J_A[i] theta_dot, both in the base
    frame; shapes (..., 3, 3, 3) with the link index first after batch.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = _chain_trig(theta)
    batch = theta.shape[:-1]
    d = np.stack([-s, c, np.zeros_like(s)], axis=-1)  # tangent of link i
    lengths = p.lengths
    j_l = np.zeros(batch + (3, 3, 3))
    # column j of J_L[i] is d r_i / d theta_j
    j_l[..., 0, :, 0] = 0.5 * lengths[0] * d[..., 0, :]
    j_l[..., 1, :, 0] = lengths[0] * d[..., 0, :] + 0.5 * lengths[1] * d[..., 1, :]
    j_l[..., 1, :, 1] = 0.5 * lengths[1] * d[..., 1, :]
    j_l[..., 2, :, 0] = (
        lengths[0] * d[..., 0, :] + lengths[1] * d[..., 1, :] + 0.5 * lengths[2] * d[..., 2, :]
    )
    j_l[..., 2, :, 1] = lengths[1] * d[..., 1, :] + 0.5 * lengths[2] * d[..., 2, :]
    j_l[..., 2, :, 2] = 0.5 * lengths[2] * d[..., 2, :]

    j_a = np.zeros((3, 3, 3))
    for i in range(3):
        j_a[i, 2, : i + 1] = 1.0
    j_a = np.broadcast_to(j_a, batch + (3, 3, 3))
    return j_l, j_a


def link_inertias(theta, p: SatelliteParams):
    """Base-frame inertia matrices of the links, shape (..., 3, 3, 3).

    Each link is a solid cylinder with axis along the link; rotating the
    principal matrix diag(ax, tr, tr) about z by the link angle gives the
    closed form below.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = _chain_trig(theta)
    batch = theta.shape[:-1]
    principal = p.link_inertia_principal
    out = np.zeros(batch + (3, 3, 3))
    for i in range(3):
        ax, tr = principal[i]
        ci, si = c[..., i], s[..., i]
        out[..., i, 0, 0] = ax * ci * ci + tr * si * si
        out[..., i, 1, 1] = ax * si * si + tr * ci * ci
        out[..., i, 0, 1] = (ax - tr) * ci * si
        out[..., i, 1, 0] = out[..., i, 0, 1]
        out[..., i, 2, 2] = tr
    return out


def _link_inertia_derivatives(theta, p: SatelliteParams):
    """d(I_i)/dtheta_m, shape (..., 3m, 3i, 3, 3); zero for m > i."""
    theta = np.asarray(theta, dtype=float)
    c, s = _chain_trig(theta)
    batch = theta.shape[:-1]
    principal = p.link_inertia_principal
    out = np.zeros(batch + (3, 3, 3, 3))
    for i in range(3):
        ax, tr = principal[i]
        ci, si = c[..., i], s[..., i]
        dxx = 2.0 * ci * si * (tr - ax)
        dxy = (ax - tr) * (ci * ci - si * si)
        for m in range(i + 1):
            out[..., m, i, 0, 0] = dxx
            out[..., m, i, 1, 1] = -dxx
            out[..., m, i, 0, 1] = dxy
            out[..., m, i, 1, 0] = dxy
    return out


def _link_jacobian_derivatives(theta, p: SatelliteParams):
    """d(J_L[i][:, j])/dtheta_m = -sum_{l=max(j,m)}^{i} coef_il u_l.

    coef_il is L_l for l < i and L_i/2 for l = i.  Returned with layout
    (..., 3m, 3i, 3, 3j).
    """
    theta = np.asarray(theta, dtype=float)
    c, s = _chain_trig(theta)
    batch = theta.shape[:-1]
    u = np.stack([c, s, np.zeros_like(c)], axis=-1)  # (..., l, 3)
    lengths = p.lengths
    out = np.zeros(batch + (3, 3, 3, 3))
    for i in range(3):
        coef = [lengths[l] if l < i else 0.5 * lengths[i] for l in range(i + 1)]
        for j in range(i + 1):
            for m in range(i + 1):
                lo = max(j, m)
                acc = sum(coef[l] * u[..., l, :] for l in range(lo, i + 1))
                out[..., m, i, :, j] = -acc
    return out


# ---------------------------------------------------------------------------
# inertia blocks and generalized matrices
# ---------------------------------------------------------------------------


def _wheel_constants(p: SatelliteParams):
    i_w = p.wheel_inertias  # (3,3,3)
    r_w = p.wheel_coms
    j_a_w = np.zeros((3, 3, 3))
    for k in range(3):
        j_a_w[k, k, k] = 1.0  # wheel k spins about base axis k
    h_o_phi = np.sum(i_w @ j_a_w, axis=0)
    h_phi = np.sum(np.swapaxes(j_a_w, -1, -2) @ i_w @ j_a_w, axis=0)
    h_vo_w = -p.m_rw * np.sum(skew(r_w), axis=0)
    d_w = np.sum(r_w * r_w, axis=-1)[:, None, None] * np.eye(3) - r_w[:, :, None] * r_w[:, None, :]
    h_o_w = np.sum(i_w, axis=0) + p.m_rw * np.sum(d_w, axis=0)
    return h_o_phi, h_phi, h_vo_w, h_o_w


def inertia_blocks(theta, p: SatelliteParams) -> InertiaBlocks:
    """All ten blocks of H at the given arm configuration."""
    theta = np.asarray(theta, dtype=float)
    batch = theta.shape[:-1]
    coms = com_positions(theta, p)
    j_l, j_a = link_jacobians(theta, p)
    i_links = link_inertias(theta, p)
    m_links = np.asarray(p.m_links)
    mw = m_links[:, None, None]

    h_o_phi, h_phi, h_vo_w, h_o_w = _wheel_constants(p)

    r_links = coms[..., 1:4, :]
    sk_links = skew(r_links)
    h_vo = -np.sum(mw * sk_links, axis=-3) + h_vo_w
    h_vth = np.sum(mw * j_l, axis=-3)

    d_links = (
        np.sum(r_links * r_links, axis=-1)[..., None, None] * np.eye(3)
        - r_links[..., :, None] * r_links[..., None, :]
    )
    h_o = p.i_b + np.sum(i_links + mw * d_links, axis=-3) + h_o_w
    h_oth = np.sum(i_links @ j_a + mw * (sk_links @ j_l), axis=-3)
    h_th = np.sum(
        mw * (np.swapaxes(j_l, -1, -2) @ j_l) + np.swapaxes(j_a, -1, -2) @ i_links @ j_a,
        axis=-3,
    )

    eye3 = np.broadcast_to(np.eye(3), batch + (3, 3))
    zero3 = np.zeros(batch + (3, 3))
    return InertiaBlocks(
        H_V=p.m_total * eye3,
        H_VO=h_vo,
        H_Vth=h_vth,
        H_VPhi=zero3,
        H_O=h_o,
        H_Oth=h_oth,
        H_OPhi=np.broadcast_to(h_o_phi, batch + (3, 3)),
        H_th=h_th,
        H_thPhi=zero3,
        H_Phi=np.broadcast_to(h_phi, batch + (3, 3)),
    )


def block_derivatives(theta, p: SatelliteParams) -> BlockDerivatives:
    """Closed-form d(block)/dtheta_m for the theta-dependent blocks.

    Cross-checked against the finite-difference dh_dtheta in the tests.
    """
    theta = np.asarray(theta, dtype=float)
    coms = com_positions(theta, p)
    j_l, j_a = link_jacobians(theta, p)
    i_links = link_inertias(theta, p)
    d_i = _link_inertia_derivatives(theta, p)  # (..., m, i, 3, 3)
    d_jl = _link_jacobian_derivatives(theta, p)  # (..., m, i, 3, 3)
    m_links = np.asarray(p.m_links)
    mw = m_links[:, None, None]

    r = coms[..., 1:4, :]  # (..., i, 3)
    dr = np.moveaxis(j_l, -1, -3)  # dr[..., m, i, :] = J_L[i][:, m]

    sk_dr = skew(dr)
    d_vo = -np.sum(mw * sk_dr, axis=-3)
    d_vth = np.sum(mw * d_jl, axis=-3)

    r_b = r[..., None, :, :]  # broadcast over m
    rdot_dr = np.sum(r_b * dr, axis=-1)  # (..., m, i)
    d_d = (
        2.0 * rdot_dr[..., None, None] * np.eye(3)
        - dr[..., :, None] * r_b[..., None, :]
        - r_b[..., :, None] * dr[..., None, :]
    )
    d_o = np.sum(d_i + mw * d_d, axis=-3)

    sk_r = skew(r)[..., None, :, :, :]
    j_l_b = j_l[..., None, :, :, :]
    j_a_b = j_a[..., None, :, :, :]
    d_oth = np.sum(d_i @ j_a_b + mw * (sk_dr @ j_l_b + sk_r @ d_jl), axis=-3)

    jlt_djl = np.swapaxes(j_l_b, -1, -2) @ d_jl
    d_th = np.sum(
        mw * (jlt_djl + np.swapaxes(jlt_djl, -1, -2))
        + np.swapaxes(j_a_b, -1, -2) @ d_i @ j_a_b,
        axis=-3,
    )
    return BlockDerivatives(dH_VO=d_vo, dH_Vth=d_vth, dH_O=d_o, dH_Oth=d_oth, dH_th=d_th)


def assemble_h(blocks: InertiaBlocks):
    """Stack the blocks into the symmetric 12x12 matrix H."""
    batch = blocks.H_O.shape[:-2]
    h = np.zeros(batch + (12, 12))
    rows = (slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 12))
    upper = [
        [blocks.H_V, blocks.H_VO, blocks.H_Vth, blocks.H_VPhi],
        [None, blocks.H_O, blocks.H_Oth, blocks.H_OPhi],
        [None, None, blocks.H_th, blocks.H_thPhi],
        [None, None, None, blocks.H_Phi],
    ]
    for i in range(4):
        for j in range(i, 4):
            blk = upper[i][j]
            h[..., rows[i], rows[j]] = blk
            if j > i:
                h[..., rows[j], rows[i]] = np.swapaxes(blk, -1, -2)
    return h


def h_matrix(theta, p: SatelliteParams):
    return assemble_h(inertia_blocks(theta, p))


def dh_dtheta(theta, p: SatelliteParams, step=FD_STEP):
    """Central finite-difference dH/dtheta_j, shape (..., 3, 12, 12).

    Independent cross-check of block_derivatives; also feeds the unreduced
    oracle so the two nonlinear-term routes never share derivative code.
    """
    theta = np.asarray(theta, dtype=float)
    h = step * np.maximum(1.0, np.abs(theta))
    stacked = np.repeat(theta[..., None, :], 6, axis=-2)
    for j in range(3):
        stacked[..., 2 * j, j] += h[..., j]
        stacked[..., 2 * j + 1, j] -= h[..., j]
    h_all = h_matrix(stacked, p)
    return (h_all[..., 0::2, :, :] - h_all[..., 1::2, :, :]) / (2.0 * h[..., :, None, None])


def kinetic_energy(w, theta, p: SatelliteParams):
    """Quadratic form K = w^T H w over w = [v_B, omega_B, theta_dot, phi_dot]."""
    w = np.asarray(w, dtype=float)
    h = h_matrix(theta, p)
    return np.einsum("...a,...ab,...b->...", w, h, w)


def generalized_matrices(blocks: InertiaBlocks) -> GeneralizedDynamics:
    """Schur-eliminate v_B from H to get the generalized inertia matrices."""
    if np.any(blocks.H_V[..., 0, 0] <= 0.0):
        raise SingularInertia("translational mass block is not positive")
    inv_m = 1.0 / blocks.H_V[..., 0, 0][..., None, None]
    h_vo_t = np.swapaxes(blocks.H_VO, -1, -2)
    h_vth_t = np.swapaxes(blocks.H_Vth, -1, -2)
    return GeneralizedDynamics(
        M_b=blocks.H_O - inv_m * (h_vo_t @ blocks.H_VO),
        M_bm=blocks.H_Oth - inv_m * (h_vo_t @ blocks.H_Vth),
        M_br=blocks.H_OPhi,
        M_m=blocks.H_th - inv_m * (h_vth_t @ blocks.H_Vth),
        M_r=blocks.H_Phi,
    )


# ---------------------------------------------------------------------------
# nonlinear terms
# ---------------------------------------------------------------------------


def base_velocity_from_momentum(theta, theta_dot, omega_b, p: SatelliteParams, blocks=None):
    """v_B under zero total linear momentum (free-floating assumption)."""
    if blocks is None:
        blocks = inertia_blocks(theta, p)
    omega_b = np.asarray(omega_b, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    return -(_mv(blocks.H_VO, omega_b) + _mv(blocks.H_Vth, theta_dot)) / p.m_total


def _coriolis_rows(blocks, dblocks, v_b, omega_b, theta_dot):
    """(row_V, row_Omega, row_theta) of c; the wheel row is identically zero."""
    t = theta_dot

    def hdot(d):
        return np.sum(t[..., :, None, None] * d, axis=-3)

    hd_vo = hdot(dblocks.dH_VO)
    hd_vth = hdot(dblocks.dH_Vth)
    hd_o = hdot(dblocks.dH_O)
    hd_oth = hdot(dblocks.dH_Oth)
    hd_th = hdot(dblocks.dH_th)

    row_v = _mv(hd_vo, omega_b) + _mv(hd_vth, t)
    row_o = _mv(np.swapaxes(hd_vo, -1, -2), v_b) + _mv(hd_o, omega_b) + _mv(hd_oth, t)
    row_th = (
        _mv(np.swapaxes(hd_vth, -1, -2), v_b)
        + _mv(np.swapaxes(hd_oth, -1, -2), omega_b)
        + _mv(hd_th, t)
    )

    def quad(d, a, b):
        return np.sum((d @ b[..., None, :, None])[..., 0] * a[..., None, :], axis=-1)

    grad = 0.5 * (
        2.0 * quad(dblocks.dH_VO, v_b, omega_b)
        + 2.0 * quad(dblocks.dH_Vth, v_b, t)
        + quad(dblocks.dH_O, omega_b, omega_b)
        + 2.0 * quad(dblocks.dH_Oth, omega_b, t)
        + quad(dblocks.dH_th, t, t)
    )
    row_th = row_th - grad
    return row_v, row_o, row_th


def coriolis_terms(
    theta, theta_dot, omega_b, p: SatelliteParams, v_b=None, blocks=None, dblocks=None
):
    """Reduced nonlinear terms (c_b, c_m, c_r) after eliminating v_B_dot.

    v_B, when not supplied, is reconstructed from zero linear momentum.
    c_r vanishes identically because all wheel-coupled blocks are constant.
    """
    theta = np.asarray(theta, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    omega_b = np.asarray(omega_b, dtype=float)
    if blocks is None:
        blocks = inertia_blocks(theta, p)
    if dblocks is None:
        dblocks = block_derivatives(theta, p)
    if v_b is None:
        v_b = base_velocity_from_momentum(theta, theta_dot, omega_b, p, blocks=blocks)
    row_v, row_o, row_th = _coriolis_rows(blocks, dblocks, v_b, omega_b, theta_dot)
    corr = row_v / p.m_total
    c_b = row_o - _mv(np.swapaxes(blocks.H_VO, -1, -2), corr)
    c_m = row_th - _mv(np.swapaxes(blocks.H_Vth, -1, -2), corr)
    return c_b, c_m, np.zeros_like(c_b)


def coriolis_full(theta, theta_dot, omega_b, p: SatelliteParams, v_b=None):
    """Unreduced 12-vector c = [c_V, c_bar_b, c_bar_m, 0].

    Shares only the block values and derivatives with the reduced path (both
    are independently cross-checked); everything downstream of the reduction
    is exercised by solving the full 12-dim system against this vector.
    """
    theta = np.asarray(theta, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    omega_b = np.asarray(omega_b, dtype=float)
    if v_b is None:
        v_b = base_velocity_from_momentum(theta, theta_dot, omega_b, p)
    dblocks = block_derivatives(theta, p)
    row_v, row_o, row_th = _coriolis_rows(None, dblocks, v_b, omega_b, theta_dot)
    batch = np.broadcast_shapes(theta.shape[:-1], omega_b.shape[:-1])
    c = np.zeros(batch + (12,))
    c[..., 0:3] = row_v
    c[..., 3:6] = row_o
    c[..., 6:9] = row_th
    return c


def generalized_dynamics(theta, theta_dot, omega_b, p: SatelliteParams) -> GeneralizedDynamics:
    """Generalized matrices with the nonlinear terms filled in."""
    blocks = inertia_blocks(theta, p)
    dyn = generalized_matrices(blocks)
    dyn.c_b, dyn.c_m, dyn.c_r = coriolis_terms(theta, theta_dot, omega_b, p, blocks=blocks)
    return dyn


# ---------------------------------------------------------------------------
# reduced equations of motion
# ---------------------------------------------------------------------------


def _guard_condition(mat, name):
    cond = np.linalg.cond(mat)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e12):
        raise SingularInertia(f"{name} condition number exceeds 1e12")


def reduced_dynamics_A(omega_b, q_rel, theta_lock, tau_r, p: SatelliteParams):
    """Base angular acceleration with the arm locked (theta_dot = 0).

    Solves M_hat_b w_dot = B_eff (tau_r - c_r) - c_b; with zero joint rates
    the nonlinear terms vanish in the base and wheel rows, but they are
    evaluated anyway so the contract holds for any c convention.
    """
    theta_lock = np.asarray(theta_lock, dtype=float)
    tau_r = np.asarray(tau_r, dtype=float)
    omega_b = np.asarray(omega_b, dtype=float)
    blocks = inertia_blocks(theta_lock, p)
    dyn = generalized_matrices(blocks)
    zeros = np.zeros(np.broadcast_shapes(omega_b.shape, theta_lock.shape))
    c_b, _, c_r = coriolis_terms(theta_lock, zeros, omega_b, p, blocks=blocks)
    _guard_condition(dyn.M_hat_b, "M_hat_b")
    rhs = (dyn.B_eff @ (tau_r - c_r)[..., None])[..., 0] - c_b
    return np.linalg.solve(dyn.M_hat_b, rhs[..., None])[..., 0]


def coupled_dynamics_B(state, tau_r, tau_m, p: SatelliteParams):
    """(omega_B_dot, theta_dd) of the coupled base/arm system.

    state is the 13-vector [theta, omega_B, theta_dot, q_rel]; the wheel
    accelerations are eliminated through the constant wheel blocks.
    """
    state = np.asarray(state, dtype=float)
    theta = state[..., 0:3]
    omega_b = state[..., 3:6]
    theta_dot = state[..., 6:9]
    tau_r = np.asarray(tau_r, dtype=float)
    tau_m = np.asarray(tau_m, dtype=float)

    blocks = inertia_blocks(theta, p)
    dyn = generalized_matrices(blocks)
    c_b, c_m, c_r = coriolis_terms(theta, theta_dot, omega_b, p, blocks=blocks)

    batch = np.broadcast_shapes(theta.shape[:-1], tau_r.shape[:-1])
    a = np.zeros(batch + (6, 6))
    a[..., 0:3, 0:3] = dyn.M_hat_b
    a[..., 0:3, 3:6] = dyn.M_bm
    a[..., 3:6, 0:3] = np.swapaxes(dyn.M_bm, -1, -2)
    a[..., 3:6, 3:6] = dyn.M_m
    _guard_condition(a, "coupled inertia matrix")

    top = (dyn.B_eff @ (tau_r - c_r)[..., None])[..., 0] - c_b
    rhs = np.concatenate([top, tau_m - c_m], axis=-1)
    acc = np.linalg.solve(a, rhs[..., None])[..., 0]
    return acc[..., 0:3], acc[..., 3:6]


def wheel_acceleration(omega_b_dot, tau_r, c_r, dyn: GeneralizedDynamics):
    """Eliminated wheel acceleration phi_dd = M_r^-1 (tau_r - M_br^T w_dot - c_r)."""
    omega_b_dot = np.asarray(omega_b_dot, dtype=float)
    rhs = (
        np.asarray(tau_r, dtype=float)
        - _mv(np.swapaxes(dyn.M_br, -1, -2), omega_b_dot)
        - np.asarray(c_r, dtype=float)
    )
    return np.linalg.solve(dyn.M_r, rhs[..., None])[..., 0]
