/**
 * One render request: CSV file(s) in, chart files out.
 *
 * For each task present (or the requested one), writes ``<task>.png``,
 * ``<task>.svg`` and a ``<task>.data.tsv`` sidecar holding exactly the rows
 * that chart was drawn from. Inputs are never modified.
 */

import * as fs from "fs";
import * as path from "path";

import { buildChartModel } from "./chart";
import { renderPng } from "./raster";
import { MetricRow, SchemaError, parseMetricsCsv } from "./schema";
import { sidecarTsv } from "./sidecar";
import { renderSvg } from "./svg";

export interface PlotRequest {
  csvPaths: string[];
  outDir: string;
  task?: string;
}

export interface RenderedChart {
  task: string;
  pngPath: string;
  svgPath: string;
  sidecarPath: string;
  bars: number;
}

const TASK_ORDER = ["retrieval_text", "retrieval_image", "zero_shot"];

export function loadRows(csvPaths: string[]): MetricRow[] {
  if (csvPaths.length === 0) {
    throw new SchemaError("no CSV inputs given");
  }
  const rows: MetricRow[] = [];
  for (const csvPath of csvPaths) {
    const text = fs.readFileSync(csvPath, "utf-8");
    rows.push(...parseMetricsCsv(text, csvPath));
  }
  return rows;
}

export function render(request: PlotRequest): RenderedChart[] {
  const rows = loadRows(request.csvPaths);
  const present = TASK_ORDER.filter((t) => rows.some((r) => r.task === t));
  for (const row of rows) {
    if (!present.includes(row.task)) present.push(row.task);
  }
  const tasks = request.task ? [request.task] : present;
  if (tasks.length === 0) {
    throw new SchemaError("no data rows to plot");
  }
  fs.mkdirSync(request.outDir, { recursive: true });
  const outputs: RenderedChart[] = [];
  for (const task of tasks) {
    const model = buildChartModel(rows, task);
    const pngPath = path.join(request.outDir, `${task}.png`);
    const svgPath = path.join(request.outDir, `${task}.svg`);
    const sidecarPath = path.join(request.outDir, `${task}.data.tsv`);
    fs.writeFileSync(pngPath, renderPng(model));
    fs.writeFileSync(svgPath, renderSvg(model));
    fs.writeFileSync(sidecarPath, sidecarTsv(model.rows));
    outputs.push({
      task,
      pngPath,
      svgPath,
      sidecarPath,
      bars: model.bars.length,
    });
  }
  return outputs;
}
