import numpy as np
import pytest

from spincontact.reference import SinusoidRef, SplineRef, sinusoid_eval, spline_eval, spline_tf

THETA_0 = np.array([0.05, 0.4, 0.05])
THETA_F = np.array([0.5, 0.2, 0.3])


def test_spline_tf_zero_displacement():
    assert spline_tf(np.zeros(3), np.full(3, 0.8), np.full(3, 0.5)) == 0.0


def test_spline_tf_value():
    # evaluate both branch terms by hand (explicit 0.5 rad/s^2 limit here)
    dtheta = THETA_F - THETA_0
    peak = 0.45
    v_norm = 0.8 * np.sqrt(3.0)
    a_norm = 0.5 * np.sqrt(3.0)
    rate_limited = 3.0 / (2.0 * v_norm) * peak  # 0.48713928962874705
    accel_limited = np.sqrt(6.0 / a_norm * peak)  # 1.7656985738296271
    assert abs(rate_limited - 0.48713928962874705) <= 1e-15
    assert abs(accel_limited - 1.7656985738296271) <= 1e-12
    t_f = spline_tf(dtheta, np.full(3, 0.8), np.full(3, 0.5))
    assert abs(t_f - accel_limited) <= 1e-12
    assert abs(t_f - max(rate_limited, accel_limited)) <= 1e-15


def test_spline_tf_scaling():
    base = spline_tf([0.2, 0.0, 0.0], np.full(3, 0.8), np.full(3, 1e9))
    assert abs(spline_tf([0.4, 0.0, 0.0], np.full(3, 0.8), np.full(3, 1e9)) - 2 * base) <= 1e-12
    base_a = spline_tf([0.2, 0.0, 0.0], np.full(3, 1e9), np.full(3, 0.5))
    doubled = spline_tf([0.4, 0.0, 0.0], np.full(3, 1e9), np.full(3, 0.5))
    assert abs(doubled - np.sqrt(2.0) * base_a) <= 1e-12


def test_default_profile_duration():
    # default acceleration limit 0.02 rad/s^2 -> t_f = sqrt(6*0.45/(0.02*sqrt(3)))
    ref = SplineRef(THETA_0, THETA_F)
    assert abs(ref.t_f - 8.828492869148135) <= 1e-9


def test_spline_boundary_conditions():
    ref = SplineRef(THETA_0, THETA_F)
    pos0, vel0, acc0 = ref.eval(0.0)
    assert np.array_equal(pos0, THETA_0)
    assert np.array_equal(vel0, np.zeros(3))
    assert np.allclose(acc0, 6.0 * ref.dtheta / ref.t_f**2)
    posf, velf, accf = ref.eval(ref.t_f)
    assert np.max(np.abs(posf - THETA_F)) <= 1e-15
    assert np.array_equal(velf, np.zeros(3))
    assert np.allclose(accf, -6.0 * ref.dtheta / ref.t_f**2)


def test_spline_midpoint():
    ref = SplineRef(THETA_0, THETA_F)
    pos, _, _ = ref.eval(ref.t_f / 2)
    assert np.allclose(pos, THETA_0 + 0.5 * ref.dtheta, atol=1e-15)


def test_spline_hold_beyond_tf():
    ref = SplineRef(THETA_0, THETA_F)
    pos, vel, acc = ref.eval(ref.t_f + 5.0)
    assert np.allclose(pos, THETA_F)
    assert np.allclose(vel, 0.0)
    assert np.allclose(acc, 0.0)


def test_spline_derivative_consistency():
    ref = SplineRef(THETA_0, THETA_F)
    ts = np.arange(0.001, ref.t_f - 0.001, 0.001)
    pos, vel, acc = ref.eval(ts)
    fd_vel = (ref.eval(ts + 5e-4)[0] - ref.eval(ts - 5e-4)[0]) / 1e-3
    fd_acc = (ref.eval(ts + 5e-4)[1] - ref.eval(ts - 5e-4)[1]) / 1e-3
    assert np.max(np.abs(fd_vel - vel)) <= 1e-5
    assert np.max(np.abs(fd_acc - acc)) <= 1e-5


def test_spline_peak_rate():
    ref = SplineRef(THETA_0, THETA_F)
    ts = np.linspace(0.0, ref.t_f, 2001)
    _, vel, _ = ref.eval(ts)
    peak = np.max(np.abs(vel))
    expected = 1.5 * np.max(np.abs(ref.dtheta)) / ref.t_f
    assert abs(peak - expected) <= 1e-9
    assert abs(ts[np.argmax(np.max(np.abs(vel), axis=-1))] - ref.t_f / 2) <= 1e-3


def test_spline_eval_wrapper():
    ref = SplineRef(THETA_0, THETA_F)
    assert np.allclose(spline_eval(ref, 0.3)[0], ref.eval(0.3)[0])


def test_sinusoid_at_zero():
    ref = SinusoidRef()
    pos, vel = sinusoid_eval(ref, 0.0)
    assert np.allclose(pos, [0.1, 0.0, 0.0])
    assert np.allclose(vel, [0.0, 0.05, 0.01])


def test_sinusoid_derivative_fd():
    ref = SinusoidRef()
    ts = np.linspace(0.0, 20.0, 300)
    pos, vel, acc = ref.eval(ts)
    h = 1e-6
    fd_vel = (ref.eval(ts + h)[0] - ref.eval(ts - h)[0]) / (2 * h)
    assert np.max(np.abs(fd_vel - vel)) <= 1e-6
    fd_acc = (ref.eval(ts + h)[1] - ref.eval(ts - h)[1]) / (2 * h)
    assert np.max(np.abs(fd_acc - acc)) <= 1e-6


def test_sinusoid_amplitude_identity():
    ref = SinusoidRef()
    pos, _, _ = ref.eval(np.linspace(0, 30, 100))
    assert np.max(np.abs(pos[:, 0] ** 2 + pos[:, 1] ** 2 - ref.a_nom**2)) <= 1e-12


def test_spline_limit_validation():
    with pytest.raises(ValueError):
        spline_tf([0.1, 0, 0], np.zeros(3), np.full(3, 0.5))
