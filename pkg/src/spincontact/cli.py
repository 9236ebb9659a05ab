"""Command-line entry point: case-study runs, dynamics validation, benchmarks.

Heavy imports happen inside main() so the thread-limiting environment
variables can be set before numpy initializes its thread pools.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .errors import ConfigError

ENV_OUT_DIR = "SPINCONTACT_OUT"

_CONFIG_SECTIONS = {
    "n_trials": int,
    "base_seed": int,
    "threads": int,
    "out_dir": str,
    "cases": list,
    "controllers": list,
    "controllers_use_nominal": bool,
    "params": dict,
    "sqp": dict,
    "pid_gains": dict,
    "perturb": dict,
    "references": dict,
    "timing": dict,
}


def _default_config():
    return {
        "cases": ["A"],
        "controllers": ["mpc", "pid"],
        "n_trials": 50,
        "base_seed": 0,
        "threads": os.cpu_count() or 1,
        "out_dir": os.environ.get(ENV_OUT_DIR, "out"),
        "controllers_use_nominal": False,
        "params": {},
        "sqp": {},
        "pid_gains": {},
        "perturb": {},
        "references": {},
        "timing": {},
    }


def parse_config(path=None, flags=None):
    """Merged run configuration: defaults, then file, then flags (flags win)."""
    merged = _default_config()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must contain a JSON object")
        for key, value in file_cfg.items():
            if key not in _CONFIG_SECTIONS:
                raise ConfigError(f"unknown config key {key!r}")
            expected = _CONFIG_SECTIONS[key]
            if not isinstance(value, expected):
                raise ConfigError(
                    f"config key {key!r} must be {expected.__name__}, got {type(value).__name__}"
                )
            merged[key] = value
    for key, value in (flags or {}).items():
        if value is not None:
            merged[key] = value
    if merged["n_trials"] < 1:
        raise ConfigError("n_trials must be >= 1")
    if merged["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    bad = [c for c in merged["cases"] if c not in ("A", "B", "C")]
    if bad:
        raise ConfigError(f"cases must be drawn from A/B/C, got {bad}")
    bad = [c for c in merged["controllers"] if c not in ("mpc", "pid")]
    if bad:
        raise ConfigError(f"controllers must be mpc/pid, got {bad}")
    return merged


def _build_case_config(merged, case, controller):
    import numpy as np

    from .experiment import CaseStudyConfig, PerturbationModel
    from .params import SatelliteParams
    from .pid import PidGains

    try:
        params = SatelliteParams(
            **{
                k: (tuple(v) if isinstance(v, list) else v)
                for k, v in merged["params"].items()
            }
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from exc
    try:
        gains = PidGains(**merged["pid_gains"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"pid_gains: {exc}") from exc
    perturb_kwargs = dict(merged["perturb"])
    try:
        perturb = PerturbationModel(**perturb_kwargs)
    except TypeError as exc:
        raise ConfigError(f"perturb: {exc}") from exc
    refs = merged["references"]
    extra = {}
    for key in ("omega_ref", "theta_0", "theta_f", "theta_dot_f", "q_f", "x0_phase_a"):
        if key in refs:
            extra[key] = np.asarray(refs[key], dtype=float)
    unknown = set(refs) - {
        "omega_ref", "theta_0", "theta_f", "theta_dot_f", "q_f", "x0_phase_a",
    }
    if unknown:
        raise ConfigError(f"references: unknown keys {sorted(unknown)}")
    timing = merged["timing"]
    unknown = set(timing) - {"phase_budget_s", "horizon", "n_shooting", "dt"}
    if unknown:
        raise ConfigError(f"timing: unknown keys {sorted(unknown)}")
    extra.update(timing)
    return CaseStudyConfig(
        case=case,
        controller=controller,
        n_trials=merged["n_trials"],
        base_seed=merged["base_seed"],
        params=params,
        perturb=perturb,
        controllers_use_nominal=merged["controllers_use_nominal"],
        pid_gains=gains,
        sqp_overrides=merged["sqp"],
        **extra,
    )


def cmd_run(args):
    flags = {
        "n_trials": args.n_trials,
        "base_seed": args.seed,
        "out_dir": args.out,
        "threads": args.threads,
        "cases": None if args.case is None else (
            ["A", "B", "C"] if args.case == "all" else [args.case]
        ),
        "controllers": None if args.controller is None else (
            ["mpc", "pid"] if args.controller == "both" else [args.controller]
        ),
    }
    merged = parse_config(args.config, flags)

    from . import __version__
    from .experiment import run_case_study
    from .output import write_json

    out_dir = Path(merged["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "resolved_config.json", merged)

    results = []
    t0 = time.perf_counter()
    for case in merged["cases"]:
        for controller in merged["controllers"]:
            print(f"case {case} / {controller}: {merged['n_trials']} trials")
            trial_cfg = _build_case_config(merged, case, controller)
            summary = run_case_study(
                trial_cfg,
                out_dir=str(out_dir),
                n_workers=merged["threads"],
                log=lambda msg: print(msg, flush=True),
            )
            print(
                f"  -> success {summary['success_percent']:.0f}%"
                f"  cv% {summary['cv_percent']}"
            )
            results.append(summary)
    payload = {
        "schema_version": 1,
        "generated_by": f"spincontact {__version__}",
        "base_seed": merged["base_seed"],
        "n_trials": merged["n_trials"],
        "elapsed_s": time.perf_counter() - t0,
        "results": results,
    }
    write_json(out_dir / "summary.json", payload)
    print(f"wrote {out_dir / 'summary.json'}")
    return 0


def cmd_validate_dynamics(args):
    import numpy as np

    from . import multibody as mb
    from . import oracles
    from .params import SatelliteParams

    p = SatelliteParams()
    checks = []
    res_free = oracles.validate_reduction(p, n_samples=args.samples, seed=args.seed, free=True)
    checks.append(("coupled-phase reduction residual", res_free, 1e-8))
    res_lock = oracles.validate_reduction(p, n_samples=args.samples, seed=args.seed + 1,
                                          free=False)
    checks.append(("locked-arm reduction residual", res_lock, 1e-8))
    drift = oracles.energy_drift_free_float(p, t_final=10.0, dt=0.01, seed=args.seed)
    checks.append(("torque-free energy drift (relative)", drift, 1e-5))
    rng = np.random.default_rng(args.seed)
    thetas = rng.uniform(0.0, 2.0 * np.pi, (200, 3))
    h = mb.h_matrix(thetas, p)
    sym = float(np.max(np.abs(h - np.swapaxes(h, -1, -2))))
    checks.append(("H symmetry", sym, 1e-10))
    min_eig = float(np.min(np.linalg.eigvalsh(h)))
    checks.append(("H positive-definiteness (min eigenvalue > 0)", -min_eig, 0.0))
    db = mb.block_derivatives(thetas[:50], p)
    dh = mb.dh_dtheta(thetas[:50], p)
    dev = max(
        float(np.max(np.abs(db.dH_VO - dh[..., 0:3, 3:6]))),
        float(np.max(np.abs(db.dH_Vth - dh[..., 0:3, 6:9]))),
        float(np.max(np.abs(db.dH_O - dh[..., 3:6, 3:6]))),
        float(np.max(np.abs(db.dH_Oth - dh[..., 3:6, 6:9]))),
        float(np.max(np.abs(db.dH_th - dh[..., 6:9, 6:9]))),
    )
    checks.append(("closed-form vs finite-difference dH/dtheta", dev, 1e-6))

    failed = 0
    for name, value, tol in checks:
        ok = value <= tol
        failed += 0 if ok else 1
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {value:.3e} (tol {tol:.0e})")
    return 1 if failed else 0


def cmd_bench(args):
    import numpy as np

    from . import config as cfgmod
    from .dynamics import PhaseADynamics, PhaseBDynamics
    from .ocp import build_ocp_A, build_ocp_B
    from .params import SatelliteParams
    from .quat import quat_normalize
    from .reference import SplineRef
    from .sqp import MpcController

    p = SatelliteParams()
    report = {}
    for phase in ("A", "B"):
        if phase == "A":
            dyn = PhaseADynamics(p, cfgmod.THETA_0, cfgmod.OMEGA_REF)
            spec = build_ocp_A(dyn)
            x = cfgmod.PHASE_A_X0.copy()
            x[3:7] = quat_normalize(x[3:7])
        else:
            dyn = PhaseBDynamics(p, cfgmod.OMEGA_REF)
            spec = build_ocp_B(dyn, SplineRef(cfgmod.THETA_0, cfgmod.THETA_F))
            x = np.concatenate([cfgmod.THETA_0, cfgmod.OMEGA_REF, np.zeros(3), cfgmod.Q_F])
        ctrl = MpcController(spec)
        times = []
        for k in range(args.steps):
            u, diag = ctrl.step(x, k * cfgmod.DT)
            x = dyn.step_batch(x[None], u[None], cfgmod.DT, cfgmod.INTEGRATOR_SUBSTEPS)[0]
            times.append(diag.solve_time)
        stats = {
            "cold_ms": 1e3 * times[0],
            "p50_ms": 1e3 * float(np.median(times[1:])),
            "p90_ms": 1e3 * float(np.quantile(times[1:], 0.9)),
            "max_ms": 1e3 * float(np.max(times[1:])),
        }
        report[f"phase_{phase}"] = stats
        print(
            f"phase {phase}: cold {stats['cold_ms']:.1f} ms, p50 {stats['p50_ms']:.1f} ms, "
            f"p90 {stats['p90_ms']:.1f} ms, max {stats['max_ms']:.1f} ms"
        )
    if args.out:
        from .output import write_json

        write_json(Path(args.out) / "bench.json", report)
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="spincontact",
        description="Servicer-satellite spin-sync / contact benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run Monte-Carlo case studies")
    run_p.add_argument("--case", choices=["A", "B", "C", "all"], default=None)
    run_p.add_argument("--controller", choices=["mpc", "pid", "both"], default=None)
    run_p.add_argument("--n-trials", type=int, default=None)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out", type=str, default=None)
    run_p.add_argument("--threads", type=int, default=None)
    run_p.add_argument("--config", type=str, default=None)
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate-dynamics", help="run the dynamics oracle suite")
    val_p.add_argument("--samples", type=int, default=100)
    val_p.add_argument("--seed", type=int, default=0)
    val_p.set_defaults(func=cmd_validate_dynamics)

    bench_p = sub.add_parser("bench", help="controller solve-time statistics")
    bench_p.add_argument("--steps", type=int, default=50)
    bench_p.add_argument("--out", type=str, default=None)
    bench_p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    # limit BLAS threading before numpy spins up its pools; trial-level
    # parallelism comes from worker processes instead
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
