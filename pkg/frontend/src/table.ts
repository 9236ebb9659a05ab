/** Comparison-table rendering in the published column order. */

import { CellSummary } from "./types.js";

export const TABLE_COLUMNS = [
  "q_rel_RMSE [rad]",
  "omega_B_RMSE [rad/s]",
  "p_ee_RMSE [m]",
  "v_ee_RMSE [m/s]",
  "t_comp [s]",
  "CV %",
  "Success %",
] as const;

const METRIC_KEYS = [
  "rmse_q_rel",
  "rmse_omega_b",
  "rmse_p_ee",
  "rmse_v_ee",
  "t_comp_mean",
] as const;

function fmt(value: number | null | undefined, digits = 4): string {
  if (value === null || value === undefined || Number.isNaN(value)) {
    return "";
  }
  if (value !== 0 && (Math.abs(value) < 1e-3 || Math.abs(value) >= 1e4)) {
    return value.toExponential(2);
  }
  return Number(value.toPrecision(digits)).toString();
}

export function tableRows(summaries: CellSummary[]): string[][] {
  return summaries.map((cell) => {
    const row = [`${cell.case}`, cell.controller.toUpperCase()];
    for (const key of METRIC_KEYS) {
      const m = cell.metrics[key];
      row.push(fmt(m ? m.median : null));
    }
    row.push(fmt(cell.cv_percent, 3));
    row.push(fmt(cell.success_percent, 3));
    return row;
  });
}

export function renderMarkdownTable(summaries: CellSummary[]): string {
  const header = ["Case", "Controller", ...TABLE_COLUMNS];
  const rows = tableRows(summaries);
  const lines = [
    `| ${header.join(" | ")} |`,
    `| ${header.map(() => "---").join(" | ")} |`,
    ...rows.map((r) => `| ${r.join(" | ")} |`),
  ];
  return lines.join("\n") + "\n";
}

export function renderCsvTable(summaries: CellSummary[]): string {
  const header = ["case", "controller", ...TABLE_COLUMNS];
  const rows = tableRows(summaries);
  return [header.join(","), ...rows.map((r) => r.join(","))].join("\n") + "\n";
}
