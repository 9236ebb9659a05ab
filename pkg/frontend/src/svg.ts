/** Scene-to-SVG serialization. */

import { Scene, SceneItem } from "./scene.js";

function fmtPt([x, y]: [number, number]): string {
  return `${x.toFixed(2)},${y.toFixed(2)}`;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function item(it: SceneItem): string {
  switch (it.kind) {
    case "polyline":
      return (
        `<polyline fill="none" stroke="${it.color}" stroke-width="${it.width}" ` +
        `points="${it.points.map(fmtPt).join(" ")}"/>`
      );
    case "polygon":
      return (
        `<polygon fill="${it.fill}" fill-opacity="${it.opacity}" stroke="none" ` +
        `points="${it.points.map(fmtPt).join(" ")}"/>`
      );
    case "text":
      return (
        `<text x="${it.x.toFixed(1)}" y="${it.y.toFixed(1)}" font-size="${it.size}" ` +
        `fill="${it.color}" text-anchor="${it.anchor}" ` +
        `font-family="Helvetica, Arial, sans-serif">${esc(it.text)}</text>`
      );
    case "rect":
      return (
        `<rect x="${it.x}" y="${it.y}" width="${it.w}" height="${it.h}" ` +
        `fill="${it.fill ?? "none"}" stroke="${it.stroke ?? "none"}"/>`
      );
  }
}

export function renderSvg(scene: Scene): string {
  const body = scene.items.map(item).join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" ` +
    `height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}">\n` +
    `  <rect x="0" y="0" width="${scene.width}" height="${scene.height}" fill="white"/>\n` +
    `  ${body}\n</svg>\n`
  );
}
