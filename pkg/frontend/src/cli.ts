#!/usr/bin/env node
/** Figure/table rendering CLI for benchmark run directories.
 *
 * Usage:
 *   spincontact-plot plot --in out/ --case A --format svg --out figures/
 *   spincontact-plot table --in out/ --out figures/
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { loadRuns } from "./load.js";
import { buildFigure, PHASE_A_PANELS, PHASE_B_PANELS } from "./plot.js";
import { renderPng } from "./png.js";
import { renderSvg } from "./svg.js";
import { renderCsvTable, renderMarkdownTable } from "./table.js";

interface Args {
  command: string;
  inDir: string;
  outDir: string;
  caseIds: string[];
  format: "svg" | "png";
}

function parseArgs(argv: string[]): Args {
  const args: Args = {
    command: argv[0] ?? "",
    inDir: "out",
    outDir: "figures",
    caseIds: ["A", "B", "C"],
    format: "svg",
  };
  for (let i = 1; i < argv.length; i++) {
    const take = () => argv[++i];
    switch (argv[i]) {
      case "--in":
        args.inDir = take();
        break;
      case "--out":
        args.outDir = take();
        break;
      case "--case": {
        const v = take();
        args.caseIds = v === "all" ? ["A", "B", "C"] : [v];
        break;
      }
      case "--format": {
        const v = take();
        if (v !== "svg" && v !== "png") {
          throw new Error(`unknown format ${v}`);
        }
        args.format = v;
        break;
      }
      default:
        throw new Error(`unknown argument ${argv[i]}`);
    }
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  if (args.command !== "plot" && args.command !== "table") {
    console.error("usage: spincontact-plot {plot|table} --in DIR [--case A|B|C|all] " +
      "[--format svg|png] --out DIR");
    return 2;
  }
  const runs = loadRuns(args.inDir);
  mkdirSync(args.outDir, { recursive: true });

  if (args.command === "table") {
    writeFileSync(join(args.outDir, "comparison_table.md"),
                  renderMarkdownTable(runs.summary.results));
    writeFileSync(join(args.outDir, "comparison_table.csv"),
                  renderCsvTable(runs.summary.results));
    console.log(`wrote ${join(args.outDir, "comparison_table.{md,csv}")}`);
    return 0;
  }

  for (const caseId of args.caseIds) {
    const hasCell = ["mpc", "pid"].some((c) => (runs.cells.get(`${caseId}/${c}`) ?? []).length > 0);
    if (!hasCell) {
      console.warn(`skipping case ${caseId}: no trials found`);
      continue;
    }
    for (const phase of ["A", "B"] as const) {
      const scene = buildFigure(runs.cells, {
        caseId,
        phase,
        panels: phase === "A" ? PHASE_A_PANELS : PHASE_B_PANELS,
      });
      const base = join(args.outDir, `case_${caseId}_phase_${phase}`);
      if (args.format === "svg") {
        writeFileSync(`${base}.svg`, renderSvg(scene));
      } else {
        writeFileSync(`${base}.png`, renderPng(scene));
      }
      console.log(`wrote ${base}.${args.format}`);
    }
  }
  return 0;
}

const isMain = process.argv[1] && /cli\.(ts|js)$/.test(process.argv[1]);
if (isMain) {
  process.exit(main(process.argv.slice(2)));
}
