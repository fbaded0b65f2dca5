/** Pixel geometry shared by the SVG and PNG renderers. */

import { Bar, ChartModel } from "./chart";

export const WIDTH = 760;
export const HEIGHT = 440;
export const MARGIN = { left: 64, right: 20, top: 48, bottom: 96 };

export const SERIES_COLORS = [
  [31, 119, 180],
  [255, 127, 14],
  [44, 160, 44],
  [214, 39, 40],
  [148, 103, 189],
] as const;

export interface BarRect {
  bar: Bar;
  x: number;
  y: number;
  w: number;
  h: number;
  color: readonly [number, number, number];
}

export interface Tick {
  value: number;
  y: number;
}

export interface Layout {
  plotLeft: number;
  plotRight: number;
  plotTop: number;
  plotBottom: number;
  rects: BarRect[];
  ticks: Tick[];
  groupCenters: { variant: string; x: number }[];
}

export function computeLayout(model: ChartModel): Layout {
  const plotLeft = MARGIN.left;
  const plotRight = WIDTH - MARGIN.right;
  const plotTop = MARGIN.top;
  const plotBottom = HEIGHT - MARGIN.bottom;
  const plotW = plotRight - plotLeft;
  const plotH = plotBottom - plotTop;

  const nGroups = model.variants.length;
  const nSeries = model.optimizers.length;
  const groupW = plotW / nGroups;
  const barW = Math.min(48, (groupW * 0.8) / nSeries);

  const rects: BarRect[] = [];
  for (const bar of model.bars) {
    const groupStart = plotLeft + bar.groupIndex * groupW;
    const clusterW = barW * nSeries;
    const x = groupStart + (groupW - clusterW) / 2 + bar.seriesIndex * barW;
    const h = (bar.value / model.yMax) * plotH;
    rects.push({
      bar,
      x,
      y: plotBottom - h,
      w: barW,
      h,
      color: SERIES_COLORS[bar.seriesIndex % SERIES_COLORS.length],
    });
  }

  const ticks: Tick[] = [];
  const step = model.yMax / 5;
  for (let value = 0; value <= model.yMax + 1e-9; value += step) {
    ticks.push({ value, y: plotBottom - (value / model.yMax) * plotH });
  }

  const groupCenters = model.variants.map((variant, gi) => ({
    variant,
    x: plotLeft + gi * groupW + groupW / 2,
  }));

  return { plotLeft, plotRight, plotTop, plotBottom, rects, ticks, groupCenters };
}
