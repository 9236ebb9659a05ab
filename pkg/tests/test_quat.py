import numpy as np
import pytest

from spincontact import quat
from spincontact.errors import NotNormalized, ZeroQuaternion


def random_unit(rng, n=1):
    q = rng.normal(size=(n, 4))
    return quat.quat_normalize(q)


def test_mul_identity_and_inverse(rng):
    for q in random_unit(rng, 20):
        assert np.allclose(quat.quat_mul(quat.IDENTITY, q), q, atol=1e-15)
        assert np.allclose(quat.quat_mul(q, quat.quat_inv(q)), quat.IDENTITY, atol=1e-12)


def test_mul_pure_i_times_pure_j():
    a = np.array([1.0, 0.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0, 0.0])
    assert np.allclose(quat.quat_mul(a, b), [0.0, 0.0, 1.0, 0.0])


def test_mul_norm_multiplicative(rng):
    a = rng.normal(size=(50, 4))
    b = rng.normal(size=(50, 4))
    prod = quat.quat_mul(a, b)
    assert np.allclose(
        np.linalg.norm(prod, axis=-1),
        np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1),
        atol=1e-12,
    )


def test_mul_associative(rng):
    a, b, c = (random_unit(rng, 30) for _ in range(3))
    left = quat.quat_mul(quat.quat_mul(a, b), c)
    right = quat.quat_mul(a, quat.quat_mul(b, c))
    assert np.max(np.abs(left - right)) <= 1e-12


def test_conj():
    assert np.allclose(quat.quat_conj([0, 0, 0, 1]), [0, 0, 0, 1])
    assert np.allclose(quat.quat_conj([1, 2, 3, 4]), [-1, -2, -3, 4])
    a = np.array([0.3, -0.2, 0.5, 0.7])
    assert np.allclose(quat.quat_conj(quat.quat_conj(a)), a)


def test_inv():
    q = quat.quat_normalize([0.1, 0.2, -0.3, 0.9])
    assert np.allclose(quat.quat_inv(q), quat.quat_conj(q), atol=1e-12)
    assert np.allclose(quat.quat_inv([0, 0, 0, 2.0]), [0, 0, 0, 0.5])
    with pytest.raises(ZeroQuaternion):
        quat.quat_inv([0.0, 0.0, 0.0, 0.0])


def test_normalize():
    assert np.allclose(quat.quat_normalize([0, 0, 0, 2.0]), [0, 0, 0, 1.0])
    v = np.array([0.1, 0.1, 0.1, 1.0])
    out = quat.quat_normalize(v)
    assert np.allclose(out, v / 1.0148891565092219, atol=1e-15)
    u = quat.quat_normalize([0.5, 0.5, 0.5, 0.5])
    assert np.allclose(quat.quat_normalize(u), u)
    with pytest.raises(ZeroQuaternion):
        quat.quat_normalize([0.0, 0.0, 0.0, 0.0])


def test_canonicalize():
    q = np.array([0.1, 0.2, 0.3, -0.5])
    assert quat.quat_canonicalize(q)[3] > 0
    q2 = np.array([0.1, 0.2, 0.3, 0.5])
    assert np.allclose(quat.quat_canonicalize(q2), q2)


def test_rotation_matrix_identity_and_z90():
    assert np.allclose(quat.rotation_matrix(quat.IDENTITY), np.eye(3))
    q = np.array([0.0, 0.0, np.sin(np.pi / 4), np.cos(np.pi / 4)])
    a = quat.rotation_matrix(q)
    assert np.allclose(a @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-12)


def test_rotation_matrix_orthogonal(rng):
    for q in random_unit(rng, 30):
        a = quat.rotation_matrix(q)
        assert np.allclose(a @ a.T, np.eye(3), atol=1e-9)
        assert abs(np.linalg.det(a) - 1.0) <= 1e-9


def test_rotation_matrix_rejects_unnormalized():
    with pytest.raises(NotNormalized):
        quat.rotation_matrix([0.0, 0.0, 0.0, 1.1])


def test_rotation_homomorphism(rng):
    a, b = random_unit(rng, 20), random_unit(rng, 20)
    left = quat.rotation_matrix(quat.quat_mul(a, b))
    right = quat.rotation_matrix(a) @ quat.rotation_matrix(b)
    assert np.max(np.abs(left - right)) <= 1e-9


def test_skew():
    assert np.allclose(quat.skew([0.0, 0.0, 0.0]), np.zeros((3, 3)))
    assert np.allclose(quat.skew([1.0, 0.0, 0.0]) @ [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])
    r = np.array([0.3, -1.2, 0.5])
    s = quat.skew(r)
    assert np.allclose(s.T, -s)
    d = s.T @ s
    assert np.allclose(d, d.T)
    assert np.all(np.linalg.eigvalsh(d) >= -1e-14)


def test_relative_quaternion(rng):
    q = random_unit(rng)[0]
    assert np.allclose(quat.relative_quaternion(q, q), quat.IDENTITY, atol=1e-12)
    assert np.allclose(quat.relative_quaternion(q, quat.IDENTITY), q, atol=1e-12)
    q_rel, q_t = random_unit(rng)[0], random_unit(rng)[0]
    q_b = quat.quat_mul(q_rel, q_t)
    assert np.allclose(quat.relative_quaternion(q_b, q_t), q_rel, atol=1e-12)


def test_quat_derivative():
    assert np.allclose(quat.quat_derivative(quat.IDENTITY, [0.0, 0.0, 0.0]), np.zeros(4))
    w = 0.7
    assert np.allclose(
        quat.quat_derivative(quat.IDENTITY, [0.0, 0.0, w]), [0.0, 0.0, w / 2, 0.0]
    )


def test_quat_derivative_orthogonal(rng):
    q = random_unit(rng, 40)
    w = rng.normal(size=(40, 3))
    qd = quat.quat_derivative(q, w)
    assert np.max(np.abs(np.sum(qd * q, axis=-1))) <= 1e-12


def test_norm_preservation_under_rk4():
    # raw RK4 on the exact kinematics, no renormalization
    from spincontact.integrate import rk4_step

    q = quat.quat_normalize(np.array([0.1, -0.2, 0.3, 0.9]))
    w = np.array([0.05, -0.3, 0.2])
    worst = 0.0
    for _ in range(1000):
        q = rk4_step(lambda x, u: quat.quat_derivative(x, w), q, None, 0.01)
        worst = max(worst, abs(np.linalg.norm(q) - 1.0))
    assert worst <= 1e-7


def test_relative_angular_velocity():
    w = np.array([0.1, 0.2, 0.3])
    assert np.allclose(quat.relative_angular_velocity(w, w, quat.IDENTITY), np.zeros(3))
    assert np.allclose(quat.relative_angular_velocity(w, np.zeros(3), quat.IDENTITY), w)
    q_z90 = np.array([0.0, 0.0, np.sin(np.pi / 4), np.cos(np.pi / 4)])
    w_z = np.array([0.0, 0.0, 0.2])
    assert np.allclose(
        quat.relative_angular_velocity(w_z, w_z, q_z90), np.zeros(3), atol=1e-12
    )
