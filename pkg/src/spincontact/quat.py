"""Quaternion algebra and orientation kinematics.

Quaternions are stored as length-4 arrays [qx, qy, qz, q0]: vector part
first, scalar part last, matching the state layout used everywhere else in
the package.  All functions broadcast over leading batch dimensions.
"""

from __future__ import annotations

import numpy as np

from .errors import NotNormalized, ZeroQuaternion

IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])

_NORM_EPS = 1e-12


def quat_mul(a, b):
    """Hamilton product a (x) b.

    Norm-multiplicative: ||a (x) b|| = ||a|| ||b||.  No normalization is
    applied, so the product of unit quaternions stays unit to round-off.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    av, a0 = a[..., :3], a[..., 3:]
    bv, b0 = b[..., :3], b[..., 3:]
    vec = a0 * bv + b0 * av + np.cross(av, bv)
    scal = a0 * b0 - np.sum(av * bv, axis=-1, keepdims=True)
    return np.concatenate([vec, scal], axis=-1)


def quat_conj(a):
    """Conjugate: negated vector part, unchanged scalar part."""
    a = np.asarray(a, dtype=float)
    out = a.copy()
    out[..., :3] *= -1.0
    return out


def quat_inv(a):
    """Inverse conj(a) / ||a||^2; equals the conjugate for unit quaternions."""
    a = np.asarray(a, dtype=float)
    n2 = np.sum(a * a, axis=-1, keepdims=True)
    if np.any(np.sqrt(n2) < _NORM_EPS):
        raise ZeroQuaternion("cannot invert a (near-)zero quaternion")
    return quat_conj(a) / n2


def quat_normalize(a):
    """Rescale to unit norm, preserving direction."""
    a = np.asarray(a, dtype=float)
    n = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(n < _NORM_EPS):
        raise ZeroQuaternion("cannot normalize a (near-)zero quaternion")
    return a / n


def quat_canonicalize(a):
    """Flip sign so the scalar part is non-negative (q and -q are one rotation)."""
    a = np.asarray(a, dtype=float)
    sign = np.where(a[..., 3:] < 0.0, -1.0, 1.0)
    return a * sign


def skew(r):
    """Skew-symmetric matrix [r x] with skew(r) @ v = r x v."""
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape[:-1] + (3, 3))
    rx, ry, rz = r[..., 0], r[..., 1], r[..., 2]
    out[..., 0, 1] = -rz
    out[..., 0, 2] = ry
    out[..., 1, 0] = rz
    out[..., 1, 2] = -rx
    out[..., 2, 0] = -ry
    out[..., 2, 1] = rx
    return out


def rotation_matrix(q, check=True):
    """Rotation matrix A(q) = I + 2 q0 [qv x] + 2 [qv x]^2 for unit q."""
    q = np.asarray(q, dtype=float)
    if check:
        n = np.linalg.norm(q, axis=-1)
        if np.any(np.abs(n - 1.0) > 1e-6):
            raise NotNormalized(f"quaternion norm deviates from 1 by {np.max(np.abs(n - 1.0)):.3e}")
    s = skew(q[..., :3])
    eye = np.broadcast_to(np.eye(3), s.shape)
    return eye + 2.0 * q[..., 3, None, None] * s + 2.0 * (s @ s)


def relative_quaternion(q_b, q_t):
    """Relative orientation q_b (x) q_t^-1, renormalized."""
    return quat_normalize(quat_mul(q_b, quat_inv(q_t)))


def quat_derivative(q_rel, omega_rel):
    """Kinematics q_dot = 1/2 [[-[w x], w], [-w^T, 0]] q.

    The 4x4 factor is skew-symmetric, so q_dot is orthogonal to q and the
    exact flow preserves the norm.
    """
    q = np.asarray(q_rel, dtype=float)
    w = np.asarray(omega_rel, dtype=float)
    qv, q0 = q[..., :3], q[..., 3:]
    vec = 0.5 * (-np.cross(w, qv) + w * q0)
    scal = -0.5 * np.sum(w * qv, axis=-1, keepdims=True)
    return np.concatenate([vec, scal], axis=-1)


def relative_angular_velocity(omega_b, omega_s, q_rel):
    """w_rel = w_B - A(q_rel) w_S, with w_S given in the target frame."""
    a = rotation_matrix(q_rel)
    omega_s = np.asarray(omega_s, dtype=float)
    return np.asarray(omega_b, dtype=float) - (a @ omega_s[..., None])[..., 0]
