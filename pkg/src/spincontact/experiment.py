"""Monte-Carlo trial runner for the three case studies.

Each trial draws perturbed physical parameters and initial/terminal values,
runs spin synchronization (arm locked) to convergence, hands the reached
state to the contact phase, and scores constraint violation, tracking RMSE,
and controller compute time.  Per-step pipeline: measure (plus observation
noise in case C), control, saturate (plus actuation noise in case C, then
re-saturate), integrate; convergence (xi) and divergence (psi) are checked
on the true state after every step.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import config as cfg
from . import multibody as mb
from .dynamics import PhaseADynamics, PhaseBDynamics
from .errors import (
    DivergenceDetected,
    LengthMismatch,
    NonFiniteState,
    ResampleExhausted,
    SolverFailure,
)
from .ocp import build_ocp_A, build_ocp_B
from .params import SatelliteParams
from .pid import PidGains, PidState, pid_control_A, pid_control_B
from .quat import quat_canonicalize, quat_normalize
from .reference import SinusoidRef, SplineRef
from .sqp import MpcController, SqpSettings


# ---------------------------------------------------------------------------
# primitive operations
# ---------------------------------------------------------------------------


def saturate(tau, tau_min, tau_max):
    """Element-wise clamp; idempotent."""
    return np.clip(np.asarray(tau, dtype=float), tau_min, tau_max)


def inject_noise(vec, sigma, rng):
    """Zero-mean Gaussian perturbation on a copy; the input stays untouched."""
    vec = np.asarray(vec, dtype=float)
    return vec + sigma * rng.standard_normal(vec.shape)


def constraint_violation(x, x_min, x_max):
    """||max(0, x_min - x)||_2 + ||max(0, x - x_max)||_2."""
    x = np.asarray(x, dtype=float)
    lo = np.linalg.norm(np.maximum(0.0, x_min - x))
    hi = np.linalg.norm(np.maximum(0.0, x - x_max))
    return float(lo + hi)


def rmse(traj, ref_traj, dt):
    """Discrete sqrt((1/T) sum ||x_k - ref_k||^2 dt) over paired samples."""
    traj = np.asarray(traj, dtype=float)
    ref_traj = np.asarray(ref_traj, dtype=float)
    if traj.shape != ref_traj.shape:
        raise LengthMismatch(f"trajectory {traj.shape} vs reference {ref_traj.shape}")
    if traj.shape[0] == 0:
        return 0.0
    err2 = np.sum((traj - ref_traj) ** 2, axis=-1)
    total_t = dt * traj.shape[0]
    return float(np.sqrt(np.sum(err2) * dt / total_t))


@dataclass(frozen=True)
class PerturbationModel:
    sigma_rel: float = cfg.PERTURB_SIGMA_REL
    floors: dict = field(default_factory=lambda: dict(cfg.STATE_FLOORS))
    max_resample: int = 1000


def sample_params(nominal: SatelliteParams, model: PerturbationModel, rng) -> SatelliteParams:
    """10% relative Gaussian draws of masses, lengths, and the base inertia.

    Masses and lengths are rejection-resampled until positive; the base
    inertia is drawn entrywise (symmetric halves mirrored) and resampled
    until positive definite.  Link and wheel inertias are recomputed from
    the sampled geometry by the parameter class.
    """
    s = model.sigma_rel
    if s == 0.0:
        return nominal

    def positive(value):
        for _ in range(model.max_resample):
            draw = rng.normal(value, s * value)
            if draw > 0.0:
                return float(draw)
        raise ResampleExhausted("could not draw a positive parameter")

    kwargs = {
        "m_b": positive(nominal.m_b),
        "m_links": tuple(positive(m) for m in nominal.m_links),
        "m_rw": positive(nominal.m_rw),
        "lengths": tuple(positive(length) for length in nominal.lengths),
    }
    for _ in range(model.max_resample):
        i_b = nominal.i_b.copy()
        for i in range(3):
            for j in range(i, 3):
                draw = rng.normal(nominal.i_b[i, j], s * abs(nominal.i_b[i, j]))
                i_b[i, j] = i_b[j, i] = draw
        if np.all(np.linalg.eigvalsh(i_b) > 0.0):
            return nominal.with_values(i_b=i_b, **kwargs)
    raise ResampleExhausted("could not draw a positive-definite base inertia")


def sample_initial_state(nominal, model: PerturbationModel, rng, floors):
    """sigma_i = sigma_rel |x_i| + floor_i per component."""
    nominal = np.asarray(nominal, dtype=float)
    sig = model.sigma_rel * np.abs(nominal) + np.asarray(floors, dtype=float)
    return rng.normal(nominal, sig)


def sample_reference(nominal, model: PerturbationModel, rng):
    """Terminal references perturb at 10% relative with no additive floor."""
    nominal = np.asarray(nominal, dtype=float)
    return rng.normal(nominal, model.sigma_rel * np.abs(nominal))


# ---------------------------------------------------------------------------
# trial configuration and result
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    enabled: bool = False
    obs_a: np.ndarray = field(default_factory=lambda: cfg.NOISE_OBS_A.copy())
    act_a: np.ndarray = field(default_factory=lambda: cfg.NOISE_ACT_A.copy())
    obs_b: np.ndarray = field(default_factory=lambda: cfg.NOISE_OBS_B.copy())
    act_b: np.ndarray = field(default_factory=lambda: cfg.NOISE_ACT_B.copy())


@dataclass(frozen=True)
class CaseStudyConfig:
    case: str = "A"  # A | B | C
    controller: str = "mpc"  # mpc | pid
    n_trials: int = 50
    base_seed: int = 0
    params: SatelliteParams = None
    phase_budget_s: float = cfg.PHASE_BUDGET_S
    dt: float = cfg.DT
    horizon: float = cfg.HORIZON_T
    n_shooting: int = cfg.N_SHOOTING
    omega_ref: np.ndarray = field(default_factory=lambda: cfg.OMEGA_REF.copy())
    theta_0: np.ndarray = field(default_factory=lambda: cfg.THETA_0.copy())
    theta_f: np.ndarray = field(default_factory=lambda: cfg.THETA_F.copy())
    theta_dot_f: np.ndarray = field(default_factory=lambda: cfg.THETA_DOT_F.copy())
    q_f: np.ndarray = field(default_factory=lambda: cfg.Q_F.copy())
    x0_phase_a: np.ndarray = field(default_factory=lambda: cfg.PHASE_A_X0.copy())
    sinusoid: SinusoidRef = field(default_factory=SinusoidRef)
    perturb: PerturbationModel = field(default_factory=PerturbationModel)
    controllers_use_nominal: bool = False
    pid_gains: PidGains = field(default_factory=PidGains)
    sqp_overrides: dict = field(default_factory=dict)
    xi: float = cfg.XI_CONVERGENCE
    psi: float = cfg.PSI_DIVERGENCE

    def __post_init__(self):
        if self.params is None:
            object.__setattr__(self, "params", SatelliteParams())
        if self.case not in ("A", "B", "C"):
            raise ValueError(f"unknown case {self.case!r}")
        if self.controller not in ("mpc", "pid"):
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.n_trials < 1 or self.dt <= 0.0 or self.phase_budget_s <= 0.0:
            raise ValueError("trial counts and durations must be positive")

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(enabled=self.case == "C")

    @property
    def steps_per_phase(self):
        return int(round(self.phase_budget_s / self.dt))


@dataclass
class TrialResult:
    index: int
    outcome: str  # success | solver_failure | diverged | timeout
    conv_time_a: float = None
    conv_time_b: float = None
    cv_count: int = 0
    cv_max: float = 0.0
    n_samples: int = 0
    rmse_q_rel: float = None
    rmse_omega_b: float = None
    rmse_theta: float = None
    rmse_theta_dot: float = None
    rmse_p_ee: float = None
    rmse_v_ee: float = None
    t_comp_mean: float = None
    refs: dict = None
    series: dict = None  # phase/time/state/u_cmd/u_exec/solve_time/cv arrays

    def metrics_dict(self):
        return {
            "rmse_q_rel": self.rmse_q_rel,
            "rmse_omega_b": self.rmse_omega_b,
            "rmse_theta": self.rmse_theta,
            "rmse_theta_dot": self.rmse_theta_dot,
            "rmse_p_ee": self.rmse_p_ee,
            "rmse_v_ee": self.rmse_v_ee,
            "t_comp_mean": self.t_comp_mean,
        }


class _Recorder:
    def __init__(self, capacity):
        self.phase = []
        self.time = np.zeros(capacity)
        self.state = np.zeros((capacity, 13))
        self.u_cmd = np.zeros((capacity, 6))
        self.u_exec = np.zeros((capacity, 6))
        self.solve_time = np.zeros(capacity)
        self.cv = np.zeros(capacity)
        self.n = 0

    def add(self, phase, t, state13, u_cmd6, u_exec6, solve_time, cv):
        k = self.n
        self.phase.append(phase)
        self.time[k] = t
        self.state[k] = state13
        self.u_cmd[k] = u_cmd6
        self.u_exec[k] = u_exec6
        self.solve_time[k] = solve_time
        self.cv[k] = cv
        self.n += 1

    def arrays(self):
        k = self.n
        return {
            "phase": np.array(self.phase),
            "time": self.time[:k].copy(),
            "state": self.state[:k].copy(),
            "u_cmd": self.u_cmd[:k].copy(),
            "u_exec": self.u_exec[:k].copy(),
            "solve_time": self.solve_time[:k].copy(),
            "cv": self.cv[:k].copy(),
        }


# ---------------------------------------------------------------------------
# one trial
# ---------------------------------------------------------------------------


def _draw_trial_values(case: str, trial_cfg: CaseStudyConfig, rng):
    """All random draws in a fixed order (paired across controllers)."""
    model = trial_cfg.perturb
    p_true = sample_params(trial_cfg.params, model, rng)
    omega_ref = sample_reference(trial_cfg.omega_ref, model, rng)
    q_f = sample_reference(trial_cfg.q_f, model, rng)
    q_f = quat_canonicalize(quat_normalize(q_f))
    theta_f = sample_reference(trial_cfg.theta_f, model, rng)
    theta_dot_f = sample_reference(trial_cfg.theta_dot_f, model, rng)
    theta_0 = sample_initial_state(
        trial_cfg.theta_0, model, rng, np.full(3, model.floors["theta"])
    )
    x0 = trial_cfg.x0_phase_a
    floors = np.concatenate(
        [np.full(3, model.floors["omega"]), np.full(4, model.floors["q"])]
    )
    x0_a = sample_initial_state(x0, model, rng, floors)
    x0_a[3:7] = quat_canonicalize(quat_normalize(x0_a[3:7]))
    return p_true, omega_ref, q_f, theta_f, theta_dot_f, theta_0, x0_a


def run_trial(trial_cfg: CaseStudyConfig, trial_index: int, collect_series=True) -> TrialResult:
    c = trial_cfg
    rng = np.random.default_rng([c.base_seed, ord(c.case), trial_index])
    p_true, omega_ref, q_f, theta_f, theta_dot_f, theta_0, x0_a = _draw_trial_values(
        c.case, c, rng
    )
    noise = c.noise
    steps = c.steps_per_phase
    rec = _Recorder(2 * steps)
    result = TrialResult(index=trial_index, outcome="timeout")

    if c.case == "B":
        joint_ref = c.sinusoid
    else:
        joint_ref = SplineRef(theta_0, theta_f)
    result.refs = {
        "omega_ref": omega_ref.tolist(),
        "q_f": q_f.tolist(),
        "theta_0": theta_0.tolist(),
        "theta_f": theta_f.tolist(),
        "theta_dot_f": theta_dot_f.tolist(),
        "case": c.case,
        "spline_t_f": None if c.case == "B" else float(joint_ref.t_f),
        "sinusoid": [c.sinusoid.a_nom, c.sinusoid.b_nom, c.sinusoid.k_nom]
        if c.case == "B"
        else None,
    }

    p_ctrl = c.params if c.controllers_use_nominal else p_true
    dyn_a_plant = PhaseADynamics(p_true, theta_0, omega_ref)
    dyn_a_ctrl = dyn_a_plant if p_ctrl is p_true else PhaseADynamics(p_ctrl, theta_0, omega_ref)
    settings = SqpSettings(**c.sqp_overrides) if c.sqp_overrides else SqpSettings()

    # ---- phase A: spin synchronization with the arm locked ----
    if c.controller == "mpc":
        ctrl_a = MpcController(
            build_ocp_A(dyn_a_ctrl, omega_ref=omega_ref, q_f=q_f,
                        n_shooting=c.n_shooting, horizon=c.horizon),
            settings,
        )
    else:
        pid_state = PidState()
        pid_gains = c.pid_gains

    x = x0_a.copy()
    converged_a = False
    for k in range(steps):
        t = k * c.dt
        x_meas = inject_noise(x, noise.obs_a, rng) if noise.enabled else x.copy()
        tic = time.perf_counter()
        try:
            if c.controller == "mpc":
                u_cmd, diag = ctrl_a.step(x_meas, t)
                t_solve = diag.solve_time
            else:
                u_cmd = pid_control_A(x_meas, pid_state, pid_gains, dyn_a_ctrl, c.dt)
                t_solve = time.perf_counter() - tic
        except SolverFailure:
            result.outcome = "solver_failure"
            break
        u_exec = saturate(u_cmd, cfg.PHASE_A_U_MIN, cfg.PHASE_A_U_MAX)
        if noise.enabled:
            u_exec = saturate(
                inject_noise(u_exec, noise.act_a, rng), cfg.PHASE_A_U_MIN, cfg.PHASE_A_U_MAX
            )
        try:
            x = dyn_a_plant.step_batch(x[None], u_exec[None], c.dt, cfg.INTEGRATOR_SUBSTEPS)[0]
        except NonFiniteState:
            result.outcome = "diverged"
            break
        cv = constraint_violation(x, cfg.PHASE_A_X_MIN, cfg.PHASE_A_X_MAX)
        state13 = np.concatenate([theta_0, x[0:3], np.zeros(3), x[3:7]])
        u6 = np.concatenate([u_cmd, np.zeros(3)])
        ue6 = np.concatenate([u_exec, np.zeros(3)])
        rec.add("A", t + c.dt, state13, u6, ue6, t_solve, cv)
        err_w = np.linalg.norm(x[0:3] - omega_ref)
        err_q = np.linalg.norm(x[3:7] - q_f)
        if max(err_w, err_q) >= c.psi:
            result.outcome = "diverged"
            break
        if err_w <= c.xi and err_q <= c.xi:
            converged_a = True
            result.conv_time_a = t + c.dt
            break
    n_steps_a = rec.n

    # ---- phase B: zero-impulse contact ----
    converged_b = False
    if converged_a:
        dyn_b_plant = PhaseBDynamics(p_true, omega_ref)
        dyn_b_ctrl = (
            dyn_b_plant if p_ctrl is p_true else PhaseBDynamics(p_ctrl, omega_ref)
        )
        if c.controller == "mpc":
            ctrl_b = MpcController(
                build_ocp_B(dyn_b_ctrl, joint_ref, omega_ref=omega_ref, q_f=q_f,
                            n_shooting=c.n_shooting, horizon=c.horizon),
                settings,
            )
        else:
            pid_state = PidState()
        x = np.concatenate([theta_0, x[0:3], np.zeros(3), x[3:7]])
        for k in range(steps):
            t = k * c.dt
            x_meas = inject_noise(x, noise.obs_b, rng) if noise.enabled else x.copy()
            tic = time.perf_counter()
            try:
                if c.controller == "mpc":
                    u_cmd, diag = ctrl_b.step(x_meas, t)
                    t_solve = diag.solve_time
                else:
                    refs_now = joint_ref.eval(t)
                    tau_r, tau_m = pid_control_B(
                        x_meas, pid_state, pid_gains, refs_now, dyn_b_ctrl, c.dt
                    )
                    u_cmd = np.concatenate([tau_r, tau_m])
                    t_solve = time.perf_counter() - tic
            except SolverFailure:
                result.outcome = "solver_failure"
                break
            u_exec = saturate(u_cmd, cfg.PHASE_B_U_MIN, cfg.PHASE_B_U_MAX)
            if noise.enabled:
                u_exec = saturate(
                    inject_noise(u_exec, noise.act_b, rng),
                    cfg.PHASE_B_U_MIN,
                    cfg.PHASE_B_U_MAX,
                )
            try:
                x = dyn_b_plant.step_batch(
                    x[None], u_exec[None], c.dt, cfg.INTEGRATOR_SUBSTEPS
                )[0]
            except NonFiniteState:
                result.outcome = "diverged"
                break
            cv = constraint_violation(x, cfg.PHASE_B_X_MIN, cfg.PHASE_B_X_MAX)
            rec.add("B", t + c.dt, x.copy(), u_cmd, u_exec, t_solve, cv)
            # convergence targets: the fixed contact configuration for the
            # point-to-point cases, the current reference for the moving one
            if c.case == "B":
                theta_tgt, theta_dot_tgt, _ = joint_ref.eval(t + c.dt)
            else:
                theta_tgt, theta_dot_tgt = theta_f, theta_dot_f
            err_th = np.linalg.norm(x[0:3] - theta_tgt)
            err_w = np.linalg.norm(x[3:6] - omega_ref)
            err_thd = np.linalg.norm(x[6:9] - theta_dot_tgt)
            err_q = np.linalg.norm(x[9:13] - q_f)
            if max(err_th, err_w, err_thd, err_q) >= c.psi:
                result.outcome = "diverged"
                break
            if max(err_th, err_w, err_thd, err_q) <= c.xi:
                converged_b = True
                result.conv_time_b = t + c.dt
                break
        if converged_b:
            result.outcome = "success"

    _score_trial(result, rec, c, omega_ref, q_f, joint_ref, n_steps_a, collect_series)
    return result


def _score_trial(result, rec, c, omega_ref, q_f, joint_ref, n_steps_a, collect_series):
    arrays = rec.arrays()
    n = rec.n
    result.cv_count = int(np.sum(arrays["cv"] > 0.0))
    result.cv_max = float(np.max(arrays["cv"], initial=0.0))
    result.n_samples = n
    if n == 0:
        return
    state = arrays["state"]
    result.rmse_q_rel = rmse(state[:, 9:13], np.tile(q_f, (n, 1)), c.dt)
    result.rmse_omega_b = rmse(state[:, 3:6], np.tile(omega_ref, (n, 1)), c.dt)
    is_b = arrays["phase"] == "B"
    if np.any(is_b):
        t_b = arrays["time"][is_b]
        th = state[is_b, 0:3]
        thd = state[is_b, 6:9]
        th_ref, thd_ref, _ = joint_ref.eval(t_b)
        result.rmse_theta = rmse(th, th_ref, c.dt)
        result.rmse_theta_dot = rmse(thd, thd_ref, c.dt)
        p_ee, _ = mb.forward_kinematics(th, c.params)
        p_ee_ref, _ = mb.forward_kinematics(th_ref, c.params)
        result.rmse_p_ee = rmse(p_ee, p_ee_ref, c.dt)
        v_ee = mb.fk_velocity(th, thd, c.params)
        v_ee_ref = mb.fk_velocity(th_ref, thd_ref, c.params)
        result.rmse_v_ee = rmse(v_ee, v_ee_ref, c.dt)
    result.t_comp_mean = float(np.mean(arrays["solve_time"]))
    if collect_series:
        result.series = arrays


# ---------------------------------------------------------------------------
# case-study orchestration
# ---------------------------------------------------------------------------


def _trial_worker(payload):
    trial_cfg, index, csv_path = payload
    result = run_trial(trial_cfg, index, collect_series=csv_path is not None)
    if csv_path is not None and result.series is not None:
        from .output import write_trial_csv

        s = result.series
        write_trial_csv(
            csv_path, s["phase"], s["time"], s["state"], s["u_cmd"], s["u_exec"],
            s["solve_time"], s["cv"],
        )
        result.series = None
    return result


def _quartiles(values):
    values = [v for v in values if v is not None and np.isfinite(v)]
    if not values:
        return None
    q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    return {"median": float(med), "iqr_low": float(q1), "iqr_high": float(q3)}


def summarize_trials(case, controller, results, n_trials):
    """Medians/IQRs over successful trials, plus the success and CV rates.

    CV % is the fraction of successful trials containing at least one
    nonzero constraint-violation sample; medians and IQRs are computed in
    the linear scale.
    """
    successes = [r for r in results if r.outcome == "success"]
    metric_names = [
        "rmse_q_rel", "rmse_omega_b", "rmse_p_ee", "rmse_v_ee",
        "rmse_theta", "rmse_theta_dot", "t_comp_mean",
    ]
    # medians/IQRs over successful trials; when none succeed the executed
    # (failed) trials keep the comparison defined
    metric_pool = successes if successes else results
    metrics = {
        name: _quartiles([getattr(r, name) for r in metric_pool]) for name in metric_names
    }
    # primary CV metric: fraction of executed control samples violating the
    # state boxes, over successful trials (over all trials when none succeed,
    # so the rate stays defined for heavily failing controllers)
    pool = successes if successes else results
    total = sum(r.n_samples for r in pool)
    cv_percent = 100.0 * sum(r.cv_count for r in pool) / total if total else None
    # the per-trial variant: fraction of successful trials with any violation
    cv_trials_percent = (
        100.0 * sum(1 for r in successes if r.cv_count > 0) / len(successes)
        if successes
        else None
    )
    outcome_counts = {}
    for r in results:
        outcome_counts[r.outcome] = outcome_counts.get(r.outcome, 0) + 1
    return {
        "case": case,
        "controller": controller,
        "n_trials": n_trials,
        "success_percent": 100.0 * len(successes) / n_trials,
        "cv_percent": cv_percent,
        "cv_trials_percent": cv_trials_percent,
        "metrics": metrics,
        "outcome_counts": outcome_counts,
        "trials": [
            {
                "index": r.index,
                "outcome": r.outcome,
                "conv_time_a": r.conv_time_a,
                "conv_time_b": r.conv_time_b,
                "cv_count": r.cv_count,
                "cv_max": r.cv_max,
                "refs": r.refs,
                **r.metrics_dict(),
            }
            for r in sorted(results, key=lambda r: r.index)
        ],
    }


def run_case_study(trial_cfg: CaseStudyConfig, out_dir=None, n_workers=1, log=None):
    """Run all trials of one (case, controller) cell and aggregate."""
    payloads = []
    for i in range(trial_cfg.n_trials):
        csv_path = None
        if out_dir is not None:
            csv_path = (
                f"{out_dir}/trials/{trial_cfg.case}/{trial_cfg.controller}/trial_{i}.csv"
            )
        payloads.append((trial_cfg, i, csv_path))
    results = []
    if n_workers > 1 and trial_cfg.n_trials > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for r in pool.map(_trial_worker, payloads):
                results.append(r)
                if log:
                    log(f"  trial {r.index}: {r.outcome}")
    else:
        for payload in payloads:
            r = _trial_worker(payload)
            results.append(r)
            if log:
                log(f"  trial {r.index}: {r.outcome}")
    return summarize_trials(trial_cfg.case, trial_cfg.controller, results, trial_cfg.n_trials)
