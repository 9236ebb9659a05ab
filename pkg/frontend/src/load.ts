/** Run-directory loading: trial CSVs grouped by (case, controller) plus the
 * summary document, with schema checks on every file. */

import { readdirSync, readFileSync, existsSync } from "node:fs";
import { join } from "node:path";

import { parseTrialCsv } from "./csv.js";
import { RunCollection, SchemaMismatch, TrialRecord, TrialRefs } from "./types.js";

export function loadRuns(dir: string): RunCollection {
  const summaryPath = join(dir, "summary.json");
  if (!existsSync(summaryPath)) {
    throw new SchemaMismatch("summary.json not found", dir);
  }
  let summary: RunCollection["summary"];
  try {
    summary = JSON.parse(readFileSync(summaryPath, "utf-8"));
  } catch (err) {
    throw new SchemaMismatch(`summary.json is not valid JSON: ${err}`, summaryPath);
  }
  if (!Array.isArray(summary.results)) {
    throw new SchemaMismatch("summary.json lacks a results array", summaryPath);
  }

  const cells = new Map<string, TrialRecord[]>();
  const trialsRoot = join(dir, "trials");
  for (const cell of summary.results) {
    const key = `${cell.case}/${cell.controller}`;
    const cellDir = join(trialsRoot, cell.case, cell.controller);
    const records: TrialRecord[] = [];
    const byIndex = new Map<number, Record<string, unknown>>();
    for (const t of cell.trials ?? []) {
      byIndex.set(t.index as number, t);
    }
    if (existsSync(cellDir)) {
      for (const name of readdirSync(cellDir).sort()) {
        const m = /^trial_(\d+)\.csv$/.exec(name);
        if (!m) {
          continue;
        }
        const index = Number(m[1]);
        const rows = parseTrialCsv(readFileSync(join(cellDir, name), "utf-8"),
                                   join(cellDir, name));
        const meta = byIndex.get(index);
        if (!meta || !meta.refs) {
          throw new SchemaMismatch(`no summary record for trial ${index}`, cellDir);
        }
        records.push({
          index,
          outcome: String(meta.outcome),
          refs: meta.refs as TrialRefs,
          rows,
        });
      }
    }
    if (records.length === 0) {
      console.warn(`warning: no trial CSVs found for ${key}`);
    }
    cells.set(key, records);
  }
  return { summary, cells };
}
