/**
 * Chart model: grouped Top-1 bars per (variant, optimizer) cell of one task.
 *
 * Variants form the groups along the x axis; optimizers are the series
 * within each group. When a cell carries several rows (multiple seeds), the
 * bar height is their mean Top-1.
 */

import { MetricRow } from "./schema";

export interface Bar {
  variant: string;
  optimizer: string;
  label: string;
  value: number;
  groupIndex: number;
  seriesIndex: number;
}

export interface ChartModel {
  task: string;
  title: string;
  variants: string[];
  optimizers: string[];
  bars: Bar[];
  yMax: number;
  rows: MetricRow[];
}

const TASK_TITLES: Record<string, string> = {
  retrieval_text: "Text Retrieval Top-1 (%)",
  retrieval_image: "Image Retrieval Top-1 (%)",
  zero_shot: "Zero-shot Top-1 (%)",
};

function ordered(values: string[]): string[] {
  const seen: string[] = [];
  for (const v of values) {
    if (!seen.includes(v)) seen.push(v);
  }
  return seen;
}

export function buildChartModel(rows: MetricRow[], task: string): ChartModel {
  const taskRows = rows.filter((r) => r.task === task);
  if (taskRows.length === 0) {
    throw new Error(`no rows for task ${task}`);
  }
  const variants = ordered(taskRows.map((r) => r.variant));
  const optimizers = ordered(taskRows.map((r) => r.optimizer));
  const bars: Bar[] = [];
  for (const [gi, variant] of variants.entries()) {
    for (const [si, optimizer] of optimizers.entries()) {
      const cell = taskRows.filter(
        (r) => r.variant === variant && r.optimizer === optimizer
      );
      if (cell.length === 0) continue;
      const value = cell.reduce((acc, r) => acc + r.top1, 0) / cell.length;
      bars.push({
        variant,
        optimizer,
        label: `${variant}+${optimizer}`,
        value,
        groupIndex: gi,
        seriesIndex: si,
      });
    }
  }
  const peak = Math.max(...bars.map((b) => b.value));
  const yMax = Math.max(10, Math.ceil(peak / 10) * 10);
  return {
    task,
    title: TASK_TITLES[task] ?? `${task} Top-1 (%)`,
    variants,
    optimizers,
    bars,
    yMax,
    rows: taskRows,
  };
}
