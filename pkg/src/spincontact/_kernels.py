"""Fused numba kernel for the coupled-phase RK4 step.

Performance twin of the numpy path in multibody/dynamics: one call advances
a batch of 13-dim states through a full zero-order-hold control interval
(RK4, configurable substeps, quaternion renormalization).  The tests pin it
against the numpy implementation to ~1e-12, and the numpy path remains the
reference for all public operations.

The planar-arm structure is exploited throughout: link positions and their
Jacobians live in the xy plane, the joint axes are all z, and the wheel
blocks are constant, so the theta-dependent inertia blocks and their
derivatives reduce to short closed-form updates.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True)
def _accelerations(theta, omega, thdot, tau, consts, ws, acc):
    """Reduced (omega_dot, theta_dd) into acc[0:6] for one sample."""
    (m_links, lengths, ax_tr, mount, i_b, h_vo_w, h_o_w, b_eff, w_corr, m_total) = consts
    (jlx, jly, djlx, djly, hvo, hvth, ho, hoth, hth,
     dvo, dvth, do_, doth, dth, a66, vec) = ws

    # chain trig
    p1 = theta[0]
    p2 = p1 + theta[1]
    p3 = p2 + theta[2]
    c0, s0 = np.cos(p1), np.sin(p1)
    c1, s1 = np.cos(p2), np.sin(p2)
    c2, s2 = np.cos(p3), np.sin(p3)
    cc = (c0, c1, c2)
    ss = (s0, s1, s2)
    l0, l1, l2 = lengths[0], lengths[1], lengths[2]

    # link CoMs (xy)
    rx0 = mount[0] + 0.5 * l0 * c0
    ry0 = 0.5 * l0 * s0
    rx1 = mount[0] + l0 * c0 + 0.5 * l1 * c1
    ry1 = l0 * s0 + 0.5 * l1 * s1
    rx2 = mount[0] + l0 * c0 + l1 * c1 + 0.5 * l2 * c2
    ry2 = l0 * s0 + l1 * s1 + 0.5 * l2 * s2
    rx = (rx0, rx1, rx2)
    ry = (ry0, ry1, ry2)

    # J_L columns (xy): jlx[i, j] = d r_i.x / d theta_j
    for i in range(3):
        for j in range(3):
            jlx[i, j] = 0.0
            jly[i, j] = 0.0
            for m in range(3):
                djlx[m, i, j] = 0.0
                djly[m, i, j] = 0.0
    for i in range(3):
        for j in range(i + 1):
            ax = 0.0
            ay = 0.0
            for l in range(j, i + 1):
                coef = 0.5 * lengths[l] if l == i else lengths[l]
                ax += coef * (-ss[l])
                ay += coef * cc[l]
            jlx[i, j] = ax
            jly[i, j] = ay
            for m in range(i + 1):
                bx = 0.0
                by = 0.0
                lo = j if j > m else m
                for l in range(lo, i + 1):
                    coef = 0.5 * lengths[l] if l == i else lengths[l]
                    bx += coef * cc[l]
                    by += coef * ss[l]
                djlx[m, i, j] = -bx
                djly[m, i, j] = -by

    # blocks
    for a in range(3):
        for b in range(3):
            hvo[a, b] = h_vo_w[a, b]
            hvth[a, b] = 0.0
            ho[a, b] = i_b[a, b] + h_o_w[a, b]
            hoth[a, b] = 0.0
            hth[a, b] = 0.0
            for m in range(3):
                dvo[m, a, b] = 0.0
                dvth[m, a, b] = 0.0
                do_[m, a, b] = 0.0
                doth[m, a, b] = 0.0
                dth[m, a, b] = 0.0

    xbar = 0.0
    ybar = 0.0
    for i in range(3):
        mi = m_links[i]
        xbar += mi * rx[i]
        ybar += mi * ry[i]
    hvo[0, 2] -= ybar
    hvo[1, 2] += xbar
    hvo[2, 0] += ybar
    hvo[2, 1] -= xbar

    for i in range(3):
        mi = m_links[i]
        axl = ax_tr[i, 0]
        trl = ax_tr[i, 1]
        ci, si = cc[i], ss[i]
        ixx = axl * ci * ci + trl * si * si
        iyy = axl * si * si + trl * ci * ci
        ixy = (axl - trl) * ci * si
        dixx = 2.0 * ci * si * (trl - axl)
        dixy = (axl - trl) * (ci * ci - si * si)
        x, y = rx[i], ry[i]
        ho[0, 0] += ixx + mi * y * y
        ho[1, 1] += iyy + mi * x * x
        ho[0, 1] += ixy - mi * x * y
        ho[2, 2] += trl + mi * (x * x + y * y)
        for j in range(3):
            hvth[0, j] += mi * jlx[i, j]
            hvth[1, j] += mi * jly[i, j]
            if j <= i:
                hoth[2, j] += trl + mi * (x * jly[i, j] - y * jlx[i, j])
            else:
                hoth[2, j] += mi * (x * jly[i, j] - y * jlx[i, j])
            for l in range(3):
                hth[j, l] += mi * (jlx[i, j] * jlx[i, l] + jly[i, j] * jly[i, l])
                if j <= i and l <= i:
                    hth[j, l] += trl
        for m in range(3):
            dx = jlx[i, m]
            dy = jly[i, m]
            dvo[m, 0, 2] -= mi * dy
            dvo[m, 1, 2] += mi * dx
            dvo[m, 2, 0] += mi * dy
            dvo[m, 2, 1] -= mi * dx
            if m <= i:
                do_[m, 0, 0] += dixx + mi * 2.0 * y * dy
                do_[m, 1, 1] += -dixx + mi * 2.0 * x * dx
                do_[m, 0, 1] += dixy - mi * (dx * y + x * dy)
            else:
                do_[m, 0, 0] += mi * 2.0 * y * dy
                do_[m, 1, 1] += mi * 2.0 * x * dx
                do_[m, 0, 1] += -mi * (dx * y + x * dy)
            do_[m, 2, 2] += 2.0 * mi * (x * dx + y * dy)
            for j in range(3):
                dvth[m, 0, j] += mi * djlx[m, i, j]
                dvth[m, 1, j] += mi * djly[m, i, j]
                doth[m, 2, j] += mi * (
                    dx * jly[i, j] + x * djly[m, i, j] - dy * jlx[i, j] - y * djlx[m, i, j]
                )
                for l in range(3):
                    dth[m, j, l] += mi * (
                        djlx[m, i, j] * jlx[i, l]
                        + djly[m, i, j] * jly[i, l]
                        + jlx[i, j] * djlx[m, i, l]
                        + jly[i, j] * djly[m, i, l]
                    )
    ho[1, 0] = ho[0, 1]
    for m in range(3):
        do_[m, 1, 0] = do_[m, 0, 1]

    # v_B from zero linear momentum
    for a in range(3):
        s = 0.0
        for b in range(3):
            s += hvo[a, b] * omega[b] + hvth[a, b] * thdot[b]
        vec[0, a] = -s / m_total  # v_B

    # H_dot blocks contracted with rates, and the gradient term
    for a in range(3):
        rv = 0.0
        ro = 0.0
        rt = 0.0
        for b in range(3):
            hd_vo = thdot[0] * dvo[0, a, b] + thdot[1] * dvo[1, a, b] + thdot[2] * dvo[2, a, b]
            hd_vth = thdot[0] * dvth[0, a, b] + thdot[1] * dvth[1, a, b] + thdot[2] * dvth[2, a, b]
            hd_o = thdot[0] * do_[0, a, b] + thdot[1] * do_[1, a, b] + thdot[2] * do_[2, a, b]
            hd_oth = thdot[0] * doth[0, a, b] + thdot[1] * doth[1, a, b] + thdot[2] * doth[2, a, b]
            hd_th = thdot[0] * dth[0, a, b] + thdot[1] * dth[1, a, b] + thdot[2] * dth[2, a, b]
            hd_vo_t = thdot[0] * dvo[0, b, a] + thdot[1] * dvo[1, b, a] + thdot[2] * dvo[2, b, a]
            hd_vth_t = (
                thdot[0] * dvth[0, b, a] + thdot[1] * dvth[1, b, a] + thdot[2] * dvth[2, b, a]
            )
            hd_oth_t = (
                thdot[0] * doth[0, b, a] + thdot[1] * doth[1, b, a] + thdot[2] * doth[2, b, a]
            )
            rv += hd_vo * omega[b] + hd_vth * thdot[b]
            ro += hd_vo_t * vec[0, b] + hd_o * omega[b] + hd_oth * thdot[b]
            rt += hd_vth_t * vec[0, b] + hd_oth_t * omega[b] + hd_th * thdot[b]
        vec[1, a] = rv  # row_V
        vec[2, a] = ro  # row_Omega
        vec[3, a] = rt  # row_theta (gradient term added below)

    for m in range(3):
        g = 0.0
        for a in range(3):
            for b in range(3):
                g += 2.0 * vec[0, a] * dvo[m, a, b] * omega[b]
                g += 2.0 * vec[0, a] * dvth[m, a, b] * thdot[b]
                g += omega[a] * do_[m, a, b] * omega[b]
                g += 2.0 * omega[a] * doth[m, a, b] * thdot[b]
                g += thdot[a] * dth[m, a, b] * thdot[b]
        vec[3, m] -= 0.5 * g

    # reduce: c_b, c_m
    for a in range(3):
        cv = 0.0
        cm = 0.0
        for b in range(3):
            cv += hvo[b, a] * vec[1, b]
            cm += hvth[b, a] * vec[1, b]
        vec[4, a] = vec[2, a] - cv / m_total  # c_b
        vec[5, a] = vec[3, a] - cm / m_total  # c_m

    # 6x6 system
    for a in range(3):
        for b in range(3):
            mb_ab = 0.0
            mbm_ab = 0.0
            mm_ab = 0.0
            for k in range(3):
                mb_ab += hvo[k, a] * hvo[k, b]
                mbm_ab += hvo[k, a] * hvth[k, b]
                mm_ab += hvth[k, a] * hvth[k, b]
            a66[a, b] = ho[a, b] - mb_ab / m_total - w_corr[a, b]
            a66[a, 3 + b] = hoth[a, b] - mbm_ab / m_total
            a66[3 + b, a] = a66[a, 3 + b]
            a66[3 + a, 3 + b] = hth[a, b] - mm_ab / m_total

    for a in range(3):
        s = 0.0
        for b in range(3):
            s += b_eff[a, b] * tau[b]
        vec[6, a] = s - vec[4, a]
        vec[6, 3 + a] = tau[3 + a] - vec[5, a]

    # Gaussian elimination with partial pivoting on a66 x = vec[6]
    for k in range(6):
        piv = k
        best = abs(a66[k, k])
        for i in range(k + 1, 6):
            if abs(a66[i, k]) > best:
                best = abs(a66[i, k])
                piv = i
        if piv != k:
            for j in range(6):
                tmp = a66[k, j]
                a66[k, j] = a66[piv, j]
                a66[piv, j] = tmp
            tmp = vec[6, k]
            vec[6, k] = vec[6, piv]
            vec[6, piv] = tmp
        for i in range(k + 1, 6):
            fct = a66[i, k] / a66[k, k]
            for j in range(k, 6):
                a66[i, j] -= fct * a66[k, j]
            vec[6, i] -= fct * vec[6, k]
    for i in range(5, -1, -1):
        s = vec[6, i]
        for j in range(i + 1, 6):
            s -= a66[i, j] * acc[j]
        acc[i] = s / a66[i, i]


@njit(cache=True)
def _deriv13(x, u, omega_s, consts, ws, acc, out):
    """Full 13-state derivative for one sample."""
    theta = x[0:3]
    omega = x[3:6]
    thdot = x[6:9]
    _accelerations(theta, omega, thdot, u, consts, ws, acc)
    for a in range(3):
        out[a] = thdot[a]
        out[3 + a] = acc[a]
        out[6 + a] = acc[3 + a]
    # omega_rel = omega - A(q) omega_s with A(q) v = v + 2 q0 (qv x v) + 2 qv x (qv x v)
    qx, qy, qz, q0 = x[9], x[10], x[11], x[12]
    vx, vy, vz = omega_s[0], omega_s[1], omega_s[2]
    cx = qy * vz - qz * vy
    cy = qz * vx - qx * vz
    cz = qx * vy - qy * vx
    dx = qy * cz - qz * cy
    dy = qz * cx - qx * cz
    dz = qx * cy - qy * cx
    wx = omega[0] - (vx + 2.0 * q0 * cx + 2.0 * dx)
    wy = omega[1] - (vy + 2.0 * q0 * cy + 2.0 * dy)
    wz = omega[2] - (vz + 2.0 * q0 * cz + 2.0 * dz)
    out[9] = 0.5 * (-(wy * qz - wz * qy) + wx * q0)
    out[10] = 0.5 * (-(wz * qx - wx * qz) + wy * q0)
    out[11] = 0.5 * (-(wx * qy - wy * qx) + wz * q0)
    out[12] = -0.5 * (wx * qx + wy * qy + wz * qz)


@njit(cache=True)
def _deriv7(x, u, omega_s, gain, out):
    """Locked-arm phase derivative: linear torque channel plus quaternion flow."""
    for a in range(3):
        s = 0.0
        for b in range(3):
            s += gain[a, b] * u[b]
        out[a] = s
    qx, qy, qz, q0 = x[3], x[4], x[5], x[6]
    vx, vy, vz = omega_s[0], omega_s[1], omega_s[2]
    cx = qy * vz - qz * vy
    cy = qz * vx - qx * vz
    cz = qx * vy - qy * vx
    dx = qy * cz - qz * cy
    dy = qz * cx - qx * cz
    dz = qx * cy - qy * cx
    wx = x[0] - (vx + 2.0 * q0 * cx + 2.0 * dx)
    wy = x[1] - (vy + 2.0 * q0 * cy + 2.0 * dy)
    wz = x[2] - (vz + 2.0 * q0 * cz + 2.0 * dz)
    out[3] = 0.5 * (-(wy * qz - wz * qy) + wx * q0)
    out[4] = 0.5 * (-(wz * qx - wx * qz) + wy * q0)
    out[5] = 0.5 * (-(wx * qy - wy * qx) + wz * q0)
    out[6] = -0.5 * (wx * qx + wy * qy + wz * qz)


@njit(cache=True)
def step_batch_a(x_in, u_in, dt, substeps, omega_s, gain):
    """RK4 advance of a batch of locked-arm states over one control interval."""
    n = x_in.shape[0]
    out = np.empty_like(x_in)
    xs = np.zeros(7)
    k1 = np.zeros(7)
    k2 = np.zeros(7)
    k3 = np.zeros(7)
    k4 = np.zeros(7)
    h = dt / substeps
    for b in range(n):
        x = out[b]
        for j in range(7):
            x[j] = x_in[b, j]
        u = u_in[b]
        for _ in range(substeps):
            _deriv7(x, u, omega_s, gain, k1)
            for j in range(7):
                xs[j] = x[j] + 0.5 * h * k1[j]
            _deriv7(xs, u, omega_s, gain, k2)
            for j in range(7):
                xs[j] = x[j] + 0.5 * h * k2[j]
            _deriv7(xs, u, omega_s, gain, k3)
            for j in range(7):
                xs[j] = x[j] + h * k3[j]
            _deriv7(xs, u, omega_s, gain, k4)
            for j in range(7):
                x[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            qn = np.sqrt(x[3] ** 2 + x[4] ** 2 + x[5] ** 2 + x[6] ** 2)
            for j in range(3, 7):
                x[j] /= qn
    return out


@njit(cache=True)
def step_batch(x_in, u_in, dt, substeps, omega_s, m_links, lengths, ax_tr, mount, i_b,
               h_vo_w, h_o_w, b_eff, w_corr, m_total):
    """RK4 advance of a batch of phase-B states over one control interval."""
    consts = (m_links, lengths, ax_tr, mount, i_b, h_vo_w, h_o_w, b_eff, w_corr, m_total)
    jlx = np.zeros((3, 3))
    jly = np.zeros((3, 3))
    djlx = np.zeros((3, 3, 3))
    djly = np.zeros((3, 3, 3))
    hvo = np.zeros((3, 3))
    hvth = np.zeros((3, 3))
    ho = np.zeros((3, 3))
    hoth = np.zeros((3, 3))
    hth = np.zeros((3, 3))
    dvo = np.zeros((3, 3, 3))
    dvth = np.zeros((3, 3, 3))
    do_ = np.zeros((3, 3, 3))
    doth = np.zeros((3, 3, 3))
    dth = np.zeros((3, 3, 3))
    a66 = np.zeros((6, 6))
    vec = np.zeros((7, 6))
    ws = (jlx, jly, djlx, djly, hvo, hvth, ho, hoth, hth, dvo, dvth, do_, doth, dth, a66, vec)

    n = x_in.shape[0]
    out = np.empty_like(x_in)
    acc = np.zeros(6)
    xs = np.zeros(13)
    k1 = np.zeros(13)
    k2 = np.zeros(13)
    k3 = np.zeros(13)
    k4 = np.zeros(13)
    h = dt / substeps
    for b in range(n):
        x = out[b]
        for j in range(13):
            x[j] = x_in[b, j]
        u = u_in[b]
        for _ in range(substeps):
            _deriv13(x, u, omega_s, consts, ws, acc, k1)
            for j in range(13):
                xs[j] = x[j] + 0.5 * h * k1[j]
            _deriv13(xs, u, omega_s, consts, ws, acc, k2)
            for j in range(13):
                xs[j] = x[j] + 0.5 * h * k2[j]
            _deriv13(xs, u, omega_s, consts, ws, acc, k3)
            for j in range(13):
                xs[j] = x[j] + h * k3[j]
            _deriv13(xs, u, omega_s, consts, ws, acc, k4)
            for j in range(13):
                x[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            qn = np.sqrt(x[9] ** 2 + x[10] ** 2 + x[11] ** 2 + x[12] ** 2)
            for j in range(9, 13):
                x[j] /= qn
    return out
