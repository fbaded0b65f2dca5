/** Hand-built SVG output; no DOM dependency, fully deterministic strings. */

import { ChartModel } from "./chart";
import { computeLayout, HEIGHT, WIDTH } from "./layout";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function rgb(color: readonly [number, number, number]): string {
  return `rgb(${color[0]},${color[1]},${color[2]})`;
}

export function renderSvg(model: ChartModel): string {
  const layout = computeLayout(model);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">` +
      `${esc(model.title)}</text>`
  );
  for (const tick of layout.ticks) {
    parts.push(
      `<line x1="${layout.plotLeft}" y1="${tick.y.toFixed(2)}" ` +
        `x2="${layout.plotRight}" y2="${tick.y.toFixed(2)}" ` +
        `stroke="#dddddd" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${layout.plotLeft - 8}" y="${(tick.y + 4).toFixed(2)}" ` +
        `text-anchor="end" font-size="11">${tick.value.toFixed(0)}</text>`
    );
  }
  for (const rect of layout.rects) {
    parts.push(
      `<rect x="${rect.x.toFixed(2)}" y="${rect.y.toFixed(2)}" ` +
        `width="${rect.w.toFixed(2)}" height="${rect.h.toFixed(2)}" ` +
        `fill="${rgb(rect.color)}"><title>${esc(rect.bar.label)}: ` +
        `${rect.bar.value.toFixed(4)}</title></rect>`
    );
    parts.push(
      `<text x="${(rect.x + rect.w / 2).toFixed(2)}" y="${(rect.y - 4).toFixed(2)}" ` +
        `text-anchor="middle" font-size="10">${rect.bar.value.toFixed(1)}</text>`
    );
    const labelY = layout.plotBottom + 10;
    parts.push(
      `<text x="${(rect.x + rect.w / 2).toFixed(2)}" y="${labelY.toFixed(2)}" ` +
        `text-anchor="end" font-size="10" ` +
        `transform="rotate(-45 ${(rect.x + rect.w / 2).toFixed(2)} ` +
        `${labelY.toFixed(2)})">${esc(rect.bar.label)}</text>`
    );
  }
  // axes on top of the grid
  parts.push(
    `<line x1="${layout.plotLeft}" y1="${layout.plotTop}" ` +
      `x2="${layout.plotLeft}" y2="${layout.plotBottom}" stroke="black"/>`
  );
  parts.push(
    `<line x1="${layout.plotLeft}" y1="${layout.plotBottom}" ` +
      `x2="${layout.plotRight}" y2="${layout.plotBottom}" stroke="black"/>`
  );
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
