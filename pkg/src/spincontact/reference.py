"""Joint reference trajectories for the contact phase.

The point-to-point profile is the cubic-in-scaled-time polynomial
theta_0 + (3 t^2 - 2 t^3) dtheta (t scaled by t_f), held at (theta_f, 0, 0)
beyond t_f.  The moving-contact-point case uses the sinusoidal reference
[A cos(Bt), A sin(Bt), K t] with its analytic derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def spline_tf(dtheta, theta_dot_max, theta_ddot_max):
    """Duration: max of the rate-limited and acceleration-limited times."""
    dtheta = np.asarray(dtheta, dtype=float)
    vmax = float(np.linalg.norm(theta_dot_max))
    amax = float(np.linalg.norm(theta_ddot_max))
    if vmax <= 0.0 or amax <= 0.0:
        raise ValueError("rate and acceleration limits must be positive")
    peak = float(np.max(np.abs(dtheta)))
    if peak == 0.0:
        return 0.0
    return max(3.0 / (2.0 * vmax) * peak, np.sqrt(6.0 / amax * peak))


@dataclass(frozen=True)
class SplineRef:
    theta_0: np.ndarray
    theta_f: np.ndarray
    theta_dot_max: np.ndarray = field(default_factory=lambda: np.full(3, 0.8))
    theta_ddot_max: np.ndarray = field(default_factory=lambda: np.full(3, 0.02))

    def __post_init__(self):
        object.__setattr__(self, "theta_0", np.asarray(self.theta_0, dtype=float))
        object.__setattr__(self, "theta_f", np.asarray(self.theta_f, dtype=float))
        object.__setattr__(self, "dtheta", self.theta_f - self.theta_0)
        object.__setattr__(
            self, "t_f", spline_tf(self.dtheta, self.theta_dot_max, self.theta_ddot_max)
        )

    def eval(self, t):
        """(theta_ref, theta_dot_ref, theta_ddot_ref) at time(s) t >= 0."""
        t = np.asarray(t, dtype=float)
        if self.t_f == 0.0:
            shape = t.shape + (3,)
            return (
                np.broadcast_to(self.theta_f, shape).copy(),
                np.zeros(shape),
                np.zeros(shape),
            )
        s = np.clip(t / self.t_f, 0.0, 1.0)[..., None]
        pos = self.theta_0 + (3.0 * s**2 - 2.0 * s**3) * self.dtheta
        vel = (6.0 * s - 6.0 * s**2) * self.dtheta / self.t_f
        acc = (6.0 - 12.0 * s) * self.dtheta / self.t_f**2
        past = (np.asarray(t)[..., None] > self.t_f)
        vel = np.where(past, 0.0, vel)
        acc = np.where(past, 0.0, acc)
        return pos, vel, acc


@dataclass(frozen=True)
class SinusoidRef:
    a_nom: float = 0.1
    b_nom: float = 0.5
    k_nom: float = 0.01

    def eval(self, t):
        """(theta_ref, theta_dot_ref, theta_ddot_ref) at time(s) t >= 0."""
        t = np.asarray(t, dtype=float)
        a, b, k = self.a_nom, self.b_nom, self.k_nom
        pos = np.stack([a * np.cos(b * t), a * np.sin(b * t), k * t], axis=-1)
        vel = np.stack(
            [-a * b * np.sin(b * t), a * b * np.cos(b * t), np.full_like(t, k)], axis=-1
        )
        acc = np.stack(
            [-a * b * b * np.cos(b * t), -a * b * b * np.sin(b * t), np.zeros_like(t)], axis=-1
        )
        return pos, vel, acc


def spline_eval(ref: SplineRef, t):
    return ref.eval(t)


def sinusoid_eval(ref: SinusoidRef, t):
    pos, vel, _ = ref.eval(t)
    return pos, vel
