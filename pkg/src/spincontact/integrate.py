"""Fixed-step explicit integrators for plant simulation and shooting."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DivergenceDetected, NonFiniteState
from .quat import quat_normalize


class Method(Enum):
    RK4 = "rk4"
    EULER = "euler"


@dataclass(frozen=True)
class IntegratorSpec:
    """Four-stage explicit RK with two substeps per 0.01 s control interval."""

    method: Method = Method.RK4
    dt: float = 0.01
    substeps: int = 2

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


def rk4_step(f, x, u, dt):
    """Classical RK4 update of x_dot = f(x, u) over one step."""
    k1 = f(x, u)
    k2 = f(x + 0.5 * dt * k1, u)
    k3 = f(x + 0.5 * dt * k2, u)
    k4 = f(x + dt * k3, u)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("non-finite state after RK4 step")
    return out


def euler_step(f, x, u, dt):
    out = x + dt * f(x, u)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("non-finite state after Euler step")
    return out


def step_interval(dyn, x, u, spec: IntegratorSpec):
    """Advance one zero-order-hold control interval, renormalizing the quaternion."""
    stepper = rk4_step if spec.method is Method.RK4 else euler_step
    h = spec.dt / spec.substeps
    for _ in range(spec.substeps):
        x = stepper(dyn.f, x, u, h)
        if dyn.quat_slice is not None:
            x[..., dyn.quat_slice] = quat_normalize(x[..., dyn.quat_slice])
    return x


def propagate_phase(x0, controls, spec: IntegratorSpec, dyn, divergence_check=None):
    """Propagate a sequence of held controls; returns N+1 states.

    divergence_check, when given, maps a state to True when the mission's
    divergence criterion fires; the trajectory then stops with an error.
    """
    x = np.array(x0, dtype=float, copy=True)
    traj = np.empty((len(controls) + 1, x.shape[-1]))
    traj[0] = x
    for k, u in enumerate(controls):
        x = step_interval(dyn, x, np.asarray(u, dtype=float), spec)
        if divergence_check is not None and divergence_check(x):
            raise DivergenceDetected(f"divergence criterion fired at step {k + 1}")
        traj[k + 1] = x
    return traj
