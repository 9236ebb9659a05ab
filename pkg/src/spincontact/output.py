"""Trial CSV and summary JSON writers (UTF-8, LF, '.' decimals)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

CSV_COLUMNS = (
    ["phase", "time_s"]
    + [f"theta_{i}_rad" for i in (1, 2, 3)]
    + [f"omega_b_{a}_rad_s" for a in ("x", "y", "z")]
    + [f"theta_dot_{i}_rad_s" for i in (1, 2, 3)]
    + [f"q_rel_{a}" for a in ("x", "y", "z", "w")]
    + [f"tau_r_{a}_cmd_nm" for a in ("x", "y", "z")]
    + [f"tau_m_{i}_cmd_nm" for i in (1, 2, 3)]
    + [f"tau_r_{a}_exec_nm" for a in ("x", "y", "z")]
    + [f"tau_m_{i}_exec_nm" for i in (1, 2, 3)]
    + ["solve_time_s", "cv_value"]
)


def write_trial_csv(path, phases, times, states, u_cmd, u_exec, solve_times, cv_values):
    """One row per executed control step; the state is the post-step sample."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for k in range(len(times)):
            row = [phases[k], repr(float(times[k]))]
            row += [repr(float(v)) for v in states[k]]
            row += [repr(float(v)) for v in u_cmd[k]]
            row += [repr(float(v)) for v in u_exec[k]]
            row += [repr(float(solve_times[k])), repr(float(cv_values[k]))]
            writer.writerow(row)


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
