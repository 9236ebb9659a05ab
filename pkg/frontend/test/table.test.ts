import { describe, expect, it } from "vitest";

import { renderCsvTable, renderMarkdownTable, TABLE_COLUMNS } from "../src/table.js";
import { CellSummary } from "../src/types.js";

function cell(overrides: Partial<CellSummary> = {}): CellSummary {
  return {
    case: "A",
    controller: "mpc",
    n_trials: 10,
    success_percent: 90,
    cv_percent: 0,
    metrics: {
      rmse_q_rel: { median: 0.0087, iqr_low: 0.005, iqr_high: 0.01 },
      rmse_omega_b: { median: 0.00084, iqr_low: 0.0005, iqr_high: 0.001 },
      rmse_p_ee: { median: 0.28, iqr_low: 0.2, iqr_high: 0.3 },
      rmse_v_ee: { median: 0.0096, iqr_low: 0.008, iqr_high: 0.01 },
      rmse_theta: { median: 0.02, iqr_low: 0.01, iqr_high: 0.03 },
      rmse_theta_dot: { median: 0.02, iqr_low: 0.01, iqr_high: 0.03 },
      t_comp_mean: { median: 0.05, iqr_low: 0.04, iqr_high: 0.06 },
    },
    outcome_counts: { success: 9, timeout: 1 },
    trials: [],
    ...overrides,
  };
}

describe("comparison table", () => {
  it("keeps the published column order", () => {
    expect([...TABLE_COLUMNS]).toEqual([
      "q_rel_RMSE [rad]",
      "omega_B_RMSE [rad/s]",
      "p_ee_RMSE [m]",
      "v_ee_RMSE [m/s]",
      "t_comp [s]",
      "CV %",
      "Success %",
    ]);
    const md = renderMarkdownTable([cell()]);
    const header = md.split("\n")[0];
    expect(header).toBe(
      "| Case | Controller | q_rel_RMSE [rad] | omega_B_RMSE [rad/s] | p_ee_RMSE [m] | " +
        "v_ee_RMSE [m/s] | t_comp [s] | CV % | Success % |",
    );
  });

  it("renders one data row per summary", () => {
    const md = renderMarkdownTable([cell(), cell({ controller: "pid" })]);
    expect(md.trim().split("\n")).toHaveLength(4); // header + rule + 2 rows
  });

  it("renders the metric medians in order", () => {
    const csv = renderCsvTable([cell()]);
    const row = csv.split("\n")[1].split(",");
    expect(row[0]).toBe("A");
    expect(row[1]).toBe("MPC");
    expect(Number(row[2])).toBeCloseTo(0.0087, 6);
    expect(Number(row[3])).toBeCloseTo(0.00084, 8);
    expect(Number(row[4])).toBeCloseTo(0.28, 6);
    expect(Number(row[6])).toBeCloseTo(0.05, 6);
    expect(Number(row[7])).toBe(0);
    expect(Number(row[8])).toBe(90);
  });

  it("leaves missing metrics empty instead of crashing", () => {
    const broken = cell();
    broken.metrics.rmse_p_ee = null;
    broken.cv_percent = null;
    const csv = renderCsvTable([broken]);
    const row = csv.split("\n")[1].split(",");
    expect(row[4]).toBe("");
    expect(row[7]).toBe("");
  });
});
