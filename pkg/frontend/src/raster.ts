/** Rasterize a chart model to PNG via the bitmap canvas. */

import { ChartModel } from "./chart";
import { computeLayout, HEIGHT, WIDTH } from "./layout";
import { Canvas, encodePng } from "./png";

const BLACK = [0, 0, 0] as const;
const GRID = [221, 221, 221] as const;

export function renderPng(model: ChartModel): Buffer {
  const layout = computeLayout(model);
  const canvas = new Canvas(WIDTH, HEIGHT);

  canvas.drawTextCentered(WIDTH / 2, 14, model.title, BLACK, 2);

  for (const tick of layout.ticks) {
    canvas.hLine(layout.plotLeft, layout.plotRight, tick.y, GRID);
    const label = tick.value.toFixed(0);
    canvas.drawText(
      layout.plotLeft - 10 - Canvas.textWidth(label), tick.y - 3, label, BLACK
    );
  }

  for (const rect of layout.rects) {
    canvas.fillRect(rect.x, rect.y, rect.w, rect.h, rect.color);
    canvas.drawTextCentered(
      rect.x + rect.w / 2, rect.y - 10, rect.bar.value.toFixed(1), BLACK
    );
  }

  canvas.vLine(layout.plotLeft, layout.plotTop, layout.plotBottom, BLACK);
  canvas.hLine(layout.plotLeft, layout.plotRight, layout.plotBottom, BLACK);

  // group label (variant) under the axis, optimizer legend in the margin
  for (const group of layout.groupCenters) {
    canvas.drawTextCentered(group.x, layout.plotBottom + 8, group.variant, BLACK);
  }
  let legendX = layout.plotLeft;
  const legendY = layout.plotBottom + 28;
  for (const [si, optimizer] of model.optimizers.entries()) {
    const color = layout.rects.find((r) => r.bar.seriesIndex === si)?.color;
    if (!color) continue;
    canvas.fillRect(legendX, legendY, 10, 10, color);
    canvas.drawText(legendX + 14, legendY + 1, optimizer, BLACK);
    legendX += 14 + Canvas.textWidth(optimizer) + 24;
  }

  return encodePng(canvas);
}
