/** Trial-CSV parsing with strict header checking. */

import { SchemaMismatch, TrialRow } from "./types.js";

export const CSV_COLUMNS = [
  "phase",
  "time_s",
  "theta_1_rad",
  "theta_2_rad",
  "theta_3_rad",
  "omega_b_x_rad_s",
  "omega_b_y_rad_s",
  "omega_b_z_rad_s",
  "theta_dot_1_rad_s",
  "theta_dot_2_rad_s",
  "theta_dot_3_rad_s",
  "q_rel_x",
  "q_rel_y",
  "q_rel_z",
  "q_rel_w",
  "tau_r_x_cmd_nm",
  "tau_r_y_cmd_nm",
  "tau_r_z_cmd_nm",
  "tau_m_1_cmd_nm",
  "tau_m_2_cmd_nm",
  "tau_m_3_cmd_nm",
  "tau_r_x_exec_nm",
  "tau_r_y_exec_nm",
  "tau_r_z_exec_nm",
  "tau_m_1_exec_nm",
  "tau_m_2_exec_nm",
  "tau_m_3_exec_nm",
  "solve_time_s",
  "cv_value",
] as const;

function vec<N extends number>(fields: string[], start: number, n: N): number[] {
  const out: number[] = [];
  for (let i = 0; i < n; i++) {
    const v = Number(fields[start + i]);
    if (!Number.isFinite(v)) {
      throw new SchemaMismatch(`non-numeric value '${fields[start + i]}'`);
    }
    out.push(v);
  }
  return out;
}

export function parseTrialCsv(text: string, file?: string): TrialRow[] {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaMismatch("empty file", file);
  }
  const header = lines[0].split(",");
  if (header.length !== CSV_COLUMNS.length || header.some((h, i) => h !== CSV_COLUMNS[i])) {
    throw new SchemaMismatch(`unexpected header: ${lines[0]}`, file);
  }
  const rows: TrialRow[] = [];
  for (let k = 1; k < lines.length; k++) {
    const f = lines[k].split(",");
    if (f.length !== CSV_COLUMNS.length) {
      throw new SchemaMismatch(`row ${k} has ${f.length} fields`, file);
    }
    if (f[0] !== "A" && f[0] !== "B") {
      throw new SchemaMismatch(`row ${k} has unknown phase '${f[0]}'`, file);
    }
    const scalars = [Number(f[1]), Number(f[27]), Number(f[28])];
    if (scalars.some((v) => !Number.isFinite(v))) {
      throw new SchemaMismatch(`row ${k}: non-numeric scalar field`, file);
    }
    try {
      rows.push({
        phase: f[0],
        time_s: scalars[0],
        theta: vec(f, 2, 3) as TrialRow["theta"],
        omega_b: vec(f, 5, 3) as TrialRow["omega_b"],
        theta_dot: vec(f, 8, 3) as TrialRow["theta_dot"],
        q_rel: vec(f, 11, 4) as TrialRow["q_rel"],
        tau_r_cmd: vec(f, 15, 3) as TrialRow["tau_r_cmd"],
        tau_m_cmd: vec(f, 18, 3) as TrialRow["tau_m_cmd"],
        tau_r_exec: vec(f, 21, 3) as TrialRow["tau_r_exec"],
        tau_m_exec: vec(f, 24, 3) as TrialRow["tau_m_exec"],
        solve_time_s: scalars[1],
        cv_value: scalars[2],
      });
    } catch (err) {
      if (err instanceof SchemaMismatch) {
        throw new SchemaMismatch(`row ${k}: ${err.message}`, file);
      }
      throw err;
    }
  }
  return rows;
}
