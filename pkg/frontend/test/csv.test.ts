import { describe, expect, it } from "vitest";

import { CSV_COLUMNS, parseTrialCsv } from "../src/csv.js";
import { SchemaMismatch } from "../src/types.js";

function makeCsv(rows: string[]): string {
  return [CSV_COLUMNS.join(","), ...rows].join("\n") + "\n";
}

const row =
  "A,0.01," + Array.from({ length: 13 }, (_, i) => `${i * 0.1}`).join(",") +
  ",1,0,0,0,0,0,0.9,0,0,0,0,0,0.002,0";

describe("trial CSV parser", () => {
  it("parses a well-formed row", () => {
    const rows = parseTrialCsv(makeCsv([row]));
    expect(rows).toHaveLength(1);
    expect(rows[0].phase).toBe("A");
    expect(rows[0].time_s).toBeCloseTo(0.01);
    expect(rows[0].tau_r_cmd[0]).toBe(1);
    expect(rows[0].tau_r_exec[0]).toBeCloseTo(0.9);
    expect(rows[0].solve_time_s).toBeCloseTo(0.002);
  });

  it("rejects a corrupted header", () => {
    const text = "time_s,phase\n0.0,A\n";
    expect(() => parseTrialCsv(text, "x.csv")).toThrow(SchemaMismatch);
  });

  it("rejects short rows and bad numerics", () => {
    expect(() => parseTrialCsv(makeCsv(["A,0.01,1,2"]))).toThrow(SchemaMismatch);
    const bad = row.replace("0.002", "not-a-number");
    expect(() => parseTrialCsv(makeCsv([bad]))).toThrow(SchemaMismatch);
  });

  it("rejects unknown phases", () => {
    expect(() => parseTrialCsv(makeCsv([row.replace(/^A/, "Z")]))).toThrow(SchemaMismatch);
  });
});
