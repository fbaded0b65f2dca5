/**
 * Sidecar data table: the exact rows a chart was drawn from, as TSV.
 *
 * Cells are copied verbatim from the input CSV (no re-formatting), so the
 * sidecar can be diffed against the input to prove the chart plots exactly
 * what was given.
 */

import { MetricRow, REQUIRED_COLUMNS } from "./schema";

export function sidecarTsv(rows: MetricRow[]): string {
  const lines = [REQUIRED_COLUMNS.join("\t")];
  for (const row of rows) {
    lines.push(row.cells.join("\t"));
  }
  return lines.join("\n") + "\n";
}
