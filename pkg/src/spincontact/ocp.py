"""Optimal-control-problem descriptions for the two mission phases."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config as cfg
from .errors import InvalidWeights


@dataclass(frozen=True)
class TerminalBand:
    """One terminal tolerance-band constraint ||x_N[sl] - ref||^2_Q <= eps."""

    name: str
    start: int
    stop: int
    weights: np.ndarray
    eps: float


@dataclass
class OcpSpec:
    """Multiple-shooting OCP over one receding horizon.

    The running cost is dt * (||x - ref||_Q^2 + ||u||_R^2) per interval plus
    a terminal ||x_N - ref_N||_We^2; reference(t0) samples the references at
    the N+1 shooting nodes starting at mission time t0.  The terminal
    tolerance bands are enforced with L1 slack (exact penalty), which keeps
    far-away initial states feasible while pinning the horizon end inside
    the band whenever it is reachable.
    """

    phase: str
    dynamics: object
    reference: object  # callable t0 -> (N+1, nx)
    q_diag: np.ndarray
    r_diag: np.ndarray
    w_e_diag: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    n_shooting: int = cfg.N_SHOOTING
    horizon: float = cfg.HORIZON_T
    substeps: int = cfg.INTEGRATOR_SUBSTEPS
    eps_terminal: dict = None

    def __post_init__(self):
        for name in ("q_diag", "r_diag", "w_e_diag", "x_min", "x_max", "u_min", "u_max"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("q_diag", "r_diag", "w_e_diag"):
            if np.any(getattr(self, name) <= 0.0):
                raise InvalidWeights(f"{name} must have strictly positive diagonal entries")
        if self.n_shooting < 1 or self.horizon <= 0.0:
            raise InvalidWeights("horizon and shooting count must be positive")
        if np.any(self.x_min > self.x_max) or np.any(self.u_min > self.u_max):
            raise InvalidWeights("box bounds must be ordered")
        nx, nu = self.dynamics.nx, self.dynamics.nu
        if not (
            len(self.q_diag) == len(self.w_e_diag) == len(self.x_min) == len(self.x_max) == nx
            and len(self.r_diag) == len(self.u_min) == len(self.u_max) == nu
        ):
            raise InvalidWeights("weight/bound dimensions do not match the dynamics")

    @property
    def dt(self):
        return self.horizon / self.n_shooting

    def terminal_bands(self):
        """Band constraints per phase; default radii put the band at 80% of
        the mission convergence tolerance in each weighted norm."""
        nx = self.dynamics.nx
        if self.phase == "A" and nx == 7:
            groups = {"omega": (0, 3), "q": (3, 7)}
        elif self.phase == "B" and nx == 13:
            groups = {"theta": (0, 3), "omega": (3, 6), "theta_dot": (6, 9), "q": (9, 13)}
        else:  # synthetic problems carry no mission band structure
            return []
        bands = []
        for name, (start, stop) in groups.items():
            w = self.q_diag[start:stop]
            eps = (
                self.eps_terminal[name]
                if self.eps_terminal and name in self.eps_terminal
                else (0.8 * cfg.XI_CONVERGENCE) ** 2 * float(np.min(w))
            )
            bands.append(TerminalBand(name, start, stop, w, eps))
        return bands


def build_ocp_A(dynamics, omega_ref=None, q_f=None, q_diag=None, r_diag=None,
                w_e_diag=None, x_min=None, x_max=None, u_min=None, u_max=None,
                **kwargs) -> OcpSpec:
    """Spin-synchronization OCP: 7 states [omega_B, q_rel], 3 wheel torques."""
    omega_ref = cfg.OMEGA_REF if omega_ref is None else np.asarray(omega_ref, dtype=float)
    q_f = cfg.Q_F if q_f is None else np.asarray(q_f, dtype=float)
    ref_point = np.concatenate([omega_ref, q_f])
    n = kwargs.get("n_shooting", cfg.N_SHOOTING)

    def reference(t0):
        return np.tile(ref_point, (n + 1, 1))

    return OcpSpec(
        phase="A",
        dynamics=dynamics,
        reference=reference,
        q_diag=cfg.PHASE_A_Q if q_diag is None else q_diag,
        r_diag=cfg.PHASE_A_R if r_diag is None else r_diag,
        w_e_diag=(
            cfg.TERMINAL_WEIGHT_SCALE * (cfg.PHASE_A_Q if q_diag is None else np.asarray(q_diag))
            if w_e_diag is None
            else w_e_diag
        ),
        x_min=cfg.PHASE_A_X_MIN if x_min is None else x_min,
        x_max=cfg.PHASE_A_X_MAX if x_max is None else x_max,
        u_min=cfg.PHASE_A_U_MIN if u_min is None else u_min,
        u_max=cfg.PHASE_A_U_MAX if u_max is None else u_max,
        **kwargs,
    )


def build_ocp_B(dynamics, joint_reference, omega_ref=None, q_f=None, q_diag=None,
                r_diag=None, w_e_diag=None, x_min=None, x_max=None, u_min=None,
                u_max=None, **kwargs) -> OcpSpec:
    """Contact-phase OCP: 13 states [theta, omega_B, theta_dot, q_rel], 6 torques.

    joint_reference.eval(t) must yield (theta_ref, theta_dot_ref, theta_dd_ref);
    the base references stay at the spin-synchronization values.
    """
    omega_ref = cfg.OMEGA_REF if omega_ref is None else np.asarray(omega_ref, dtype=float)
    q_f = cfg.Q_F if q_f is None else np.asarray(q_f, dtype=float)
    n = kwargs.get("n_shooting", cfg.N_SHOOTING)
    horizon = kwargs.get("horizon", cfg.HORIZON_T)
    dt = horizon / n

    def reference(t0):
        times = t0 + dt * np.arange(n + 1)
        pos, vel, _ = joint_reference.eval(times)
        out = np.empty((n + 1, 13))
        out[:, 0:3] = pos
        out[:, 3:6] = omega_ref
        out[:, 6:9] = vel
        out[:, 9:13] = q_f
        return out

    return OcpSpec(
        phase="B",
        dynamics=dynamics,
        reference=reference,
        q_diag=cfg.PHASE_B_Q if q_diag is None else q_diag,
        r_diag=cfg.PHASE_B_R if r_diag is None else r_diag,
        w_e_diag=(
            cfg.TERMINAL_WEIGHT_SCALE * (cfg.PHASE_B_Q if q_diag is None else np.asarray(q_diag))
            if w_e_diag is None
            else w_e_diag
        ),
        x_min=cfg.PHASE_B_X_MIN if x_min is None else x_min,
        x_max=cfg.PHASE_B_X_MAX if x_max is None else x_max,
        u_min=cfg.PHASE_B_U_MIN if u_min is None else u_min,
        u_max=cfg.PHASE_B_U_MAX if u_max is None else u_max,
        **kwargs,
    )
