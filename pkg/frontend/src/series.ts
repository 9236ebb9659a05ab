/** Error-norm series recomputed from raw states and re-derived references. */

import { TrialRecord, TrialRefs, TrialRow } from "./types.js";

function norm(v: number[]): number {
  return Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
}

function infNorm(v: number[]): number {
  return Math.max(...v.map(Math.abs));
}

function sub(a: number[], b: number[]): number[] {
  return a.map((x, i) => x - b[i]);
}

/** Joint reference at phase-B time t, re-derived from the trial's refs. */
export function jointReference(refs: TrialRefs, t: number): {
  pos: number[];
  vel: number[];
} {
  if (refs.case === "B") {
    if (!refs.sinusoid) {
      throw new Error("case B trial without sinusoid parameters");
    }
    const [a, b, k] = refs.sinusoid;
    return {
      pos: [a * Math.cos(b * t), a * Math.sin(b * t), k * t],
      vel: [-a * b * Math.sin(b * t), a * b * Math.cos(b * t), k],
    };
  }
  const tf = refs.spline_t_f;
  if (tf === null) {
    throw new Error("point-to-point trial without spline duration");
  }
  const d = sub(refs.theta_f, refs.theta_0);
  if (tf === 0 || t >= tf) {
    return { pos: [...refs.theta_f], vel: [0, 0, 0] };
  }
  const s = Math.max(0, t / tf);
  const pos = refs.theta_0.map((th0, i) => th0 + (3 * s * s - 2 * s * s * s) * d[i]);
  const vel = d.map((di) => ((6 * s - 6 * s * s) * di) / tf);
  return { pos, vel };
}

export type PanelKind =
  | "omega_err"
  | "q_err"
  | "theta_err"
  | "theta_dot_err"
  | "tau_r_inf"
  | "tau_m_inf";

export const PANEL_LABELS: Record<PanelKind, string> = {
  omega_err: "|omega_B - omega_ref|_2 [rad/s]",
  q_err: "|q_rel - q_f|_2 [-]",
  theta_err: "|theta - theta_ref|_2 [rad]",
  theta_dot_err: "|theta_dot - theta_dot_ref|_2 [rad/s]",
  tau_r_inf: "|tau_r|_inf [N m]",
  tau_m_inf: "|tau_m|_inf [N m]",
};

export function panelValue(kind: PanelKind, row: TrialRow, refs: TrialRefs): number {
  switch (kind) {
    case "omega_err":
      return norm(sub(row.omega_b, refs.omega_ref));
    case "q_err":
      return norm(sub(row.q_rel, refs.q_f));
    case "theta_err":
      return norm(sub(row.theta, jointReference(refs, row.time_s).pos));
    case "theta_dot_err":
      return norm(sub(row.theta_dot, jointReference(refs, row.time_s).vel));
    case "tau_r_inf":
      return infNorm(row.tau_r_exec);
    case "tau_m_inf":
      return infNorm(row.tau_m_exec);
  }
}

/** One trial's (t, value) series for a panel, restricted to one phase. */
export function panelSeries(
  trial: TrialRecord,
  phase: "A" | "B",
  kind: PanelKind,
): { t: number[]; v: number[] } {
  const t: number[] = [];
  const v: number[] = [];
  for (const row of trial.rows) {
    if (row.phase === phase) {
      t.push(row.time_s);
      v.push(panelValue(kind, row, trial.refs));
    }
  }
  return { t, v };
}
