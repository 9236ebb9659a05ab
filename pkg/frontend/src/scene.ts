/** Renderer-independent scene model: charts are built as primitive lists and
 * serialized to SVG or rasterized to PNG from the same description. */

export interface Polyline {
  kind: "polyline";
  points: Array<[number, number]>;
  color: string;
  width: number;
}

export interface Polygon {
  kind: "polygon";
  points: Array<[number, number]>;
  fill: string;
  opacity: number;
}

export interface TextItem {
  kind: "text";
  x: number;
  y: number;
  text: string;
  size: number;
  color: string;
  anchor: "start" | "middle" | "end";
}

export interface RectItem {
  kind: "rect";
  x: number;
  y: number;
  w: number;
  h: number;
  stroke?: string;
  fill?: string;
}

export type SceneItem = Polyline | Polygon | TextItem | RectItem;

export interface Scene {
  width: number;
  height: number;
  items: SceneItem[];
}

const FLOOR = 1e-12; // log-axis floor for nonpositive values

export interface AxisMap {
  x: (t: number) => number;
  y: (v: number) => number;
}

/** Log-10 y-axis mapping over a plot box, flooring values at 1e-12. */
export function logAxis(
  box: { x0: number; y0: number; w: number; h: number },
  tRange: [number, number],
  vRange: [number, number],
): AxisMap {
  const vLo = Math.log10(Math.max(vRange[0], FLOOR));
  const vHi = Math.log10(Math.max(vRange[1], vRange[0] * 10 + FLOOR, FLOOR * 10));
  const span = Math.max(vHi - vLo, 1e-9);
  return {
    x: (t) =>
      box.x0 + ((t - tRange[0]) / Math.max(tRange[1] - tRange[0], 1e-12)) * box.w,
    y: (v) => {
      const lv = Math.log10(Math.max(v, FLOOR));
      return box.y0 + box.h - ((lv - vLo) / span) * box.h;
    },
  };
}

export function floorPositive(v: number): number {
  return Math.max(v, FLOOR);
}
