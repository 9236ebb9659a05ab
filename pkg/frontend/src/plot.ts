/** Figure assembly: median line plus IQR band per controller, one figure per
 * phase per case, log-scale error axes. */

import { logAxis, Scene, SceneItem } from "./scene.js";
import { medianIqrBand } from "./stats.js";
import { PANEL_LABELS, PanelKind, panelSeries } from "./series.js";
import { TrialRecord } from "./types.js";

export interface FigureSpec {
  caseId: string;
  phase: "A" | "B";
  panels: PanelKind[];
  width?: number;
  panelHeight?: number;
}

export const PHASE_A_PANELS: PanelKind[] = ["omega_err", "q_err", "tau_r_inf"];
export const PHASE_B_PANELS: PanelKind[] = [
  "theta_err", "omega_err", "tau_r_inf",
  "theta_dot_err", "q_err", "tau_m_inf",
];

const CONTROLLER_COLORS: Record<string, string> = {
  mpc: "#1f6fb4",
  pid: "#d1622b",
};

function niceTicks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = (span / n) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) {
    out.push(Number(v.toPrecision(10)));
  }
  return out;
}

export function buildFigure(
  cells: Map<string, TrialRecord[]>,
  spec: FigureSpec,
): Scene {
  const width = spec.width ?? 560;
  const panelH = spec.panelHeight ?? 170;
  const cols = spec.panels.length > 3 ? 2 : 1;
  const rows = Math.ceil(spec.panels.length / cols);
  const margin = { left: 70, right: 16, top: 34, bottom: 40 };
  const plotW = (width - margin.left - margin.right - (cols - 1) * 60) / cols;
  const height = margin.top + rows * panelH + margin.bottom;
  const items: SceneItem[] = [];

  const controllers = ["mpc", "pid"].filter((c) =>
    cells.has(`${spec.caseId}/${c}`),
  );
  items.push({
    kind: "text", x: width / 2, y: 18, anchor: "middle", size: 12, color: "black",
    text: `case ${spec.caseId} phase ${spec.phase}`,
  });
  let legendX = margin.left;
  for (const ctrl of controllers) {
    items.push({
      kind: "polyline", color: CONTROLLER_COLORS[ctrl], width: 2,
      points: [[legendX, 26], [legendX + 24, 26]],
    });
    items.push({
      kind: "text", x: legendX + 30, y: 30, anchor: "start", size: 9,
      color: "black", text: ctrl.toUpperCase(),
    });
    legendX += 90;
  }

  spec.panels.forEach((panel, idx) => {
    const col = Math.floor(idx / rows);
    const row = idx % rows;
    const box = {
      x0: margin.left + col * (plotW + 60),
      y0: margin.top + row * panelH + 8,
      w: plotW,
      h: panelH - 42,
    };
    // gather per-controller bands
    const bands = controllers.map((ctrl) => {
      const trials = cells.get(`${spec.caseId}/${ctrl}`) ?? [];
      const series = trials
        .map((t) => panelSeries(t, spec.phase, panel))
        .filter((s) => s.t.length > 0);
      return { ctrl, band: medianIqrBand(series) };
    }).filter((b) => b.band.length > 0);
    if (bands.length === 0) {
      return;
    }
    let tMax = 0;
    let vMin = Infinity;
    let vMax = -Infinity;
    for (const { band } of bands) {
      for (const p of band) {
        tMax = Math.max(tMax, p.t);
        vMin = Math.min(vMin, Math.max(p.q1, 1e-12));
        vMax = Math.max(vMax, p.q3);
      }
    }
    const axis = logAxis(box, [0, tMax], [vMin, vMax]);
    items.push({ kind: "rect", ...{ x: box.x0, y: box.y0, w: box.w, h: box.h }, stroke: "gray" });
    // y decade ticks
    const dLo = Math.ceil(Math.log10(Math.max(vMin, 1e-12)));
    const dHi = Math.floor(Math.log10(Math.max(vMax, 1e-12)));
    for (let d = dLo; d <= dHi; d++) {
      const y = axis.y(Math.pow(10, d));
      items.push({ kind: "polyline", color: "#dddddd", width: 0.6,
                   points: [[box.x0, y], [box.x0 + box.w, y]] });
      items.push({ kind: "text", x: box.x0 - 4, y: y + 3, anchor: "end", size: 8,
                   color: "black", text: `1e${d}` });
    }
    for (const t of niceTicks(0, tMax)) {
      const x = axis.x(t);
      items.push({ kind: "polyline", color: "#dddddd", width: 0.6,
                   points: [[x, box.y0], [x, box.y0 + box.h]] });
      items.push({ kind: "text", x, y: box.y0 + box.h + 12, anchor: "middle", size: 8,
                   color: "black", text: `${t}` });
    }
    items.push({
      kind: "text", x: box.x0, y: box.y0 - 4, anchor: "start", size: 9,
      color: "black", text: PANEL_LABELS[panel],
    });
    items.push({
      kind: "text", x: box.x0 + box.w / 2, y: box.y0 + box.h + 26, anchor: "middle",
      size: 9, color: "black", text: "t [s]",
    });
    for (const { ctrl, band } of bands) {
      const color = CONTROLLER_COLORS[ctrl];
      const upper = band.map((p) => [axis.x(p.t), axis.y(p.q3)] as [number, number]);
      const lower = band
        .map((p) => [axis.x(p.t), axis.y(p.q1)] as [number, number])
        .reverse();
      items.push({ kind: "polygon", points: [...upper, ...lower], fill: color, opacity: 0.25 });
      items.push({
        kind: "polyline", color, width: 1.6,
        points: band.map((p) => [axis.x(p.t), axis.y(p.median)] as [number, number]),
      });
    }
  });
  return { width, height, items };
}
