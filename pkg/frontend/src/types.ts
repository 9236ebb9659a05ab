/** Shared shapes for trial data loaded from the benchmark CLI's outputs. */

export interface TrialRow {
  phase: "A" | "B";
  time_s: number;
  theta: [number, number, number];
  omega_b: [number, number, number];
  theta_dot: [number, number, number];
  q_rel: [number, number, number, number];
  tau_r_cmd: [number, number, number];
  tau_m_cmd: [number, number, number];
  tau_r_exec: [number, number, number];
  tau_m_exec: [number, number, number];
  solve_time_s: number;
  cv_value: number;
}

export interface TrialRefs {
  omega_ref: number[];
  q_f: number[];
  theta_0: number[];
  theta_f: number[];
  theta_dot_f: number[];
  case: string;
  spline_t_f: number | null;
  sinusoid: number[] | null;
}

export interface TrialRecord {
  index: number;
  outcome: string;
  refs: TrialRefs;
  rows: TrialRow[];
}

export interface CellSummary {
  case: string;
  controller: string;
  n_trials: number;
  success_percent: number;
  cv_percent: number | null;
  metrics: Record<string, { median: number; iqr_low: number; iqr_high: number } | null>;
  outcome_counts: Record<string, number>;
  trials: Array<Record<string, unknown>>;
}

export interface RunCollection {
  summary: { results: CellSummary[]; n_trials: number; base_seed: number };
  cells: Map<string, TrialRecord[]>; // key `${case}/${controller}`
}

export class SchemaMismatch extends Error {
  constructor(message: string, readonly file?: string) {
    super(file ? `${file}: ${message}` : message);
    this.name = "SchemaMismatch";
  }
}
